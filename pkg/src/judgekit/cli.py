"""Command-line front end.

Commands: ingest, index, search, prejudge, write, run, eval, sweep-k2,
serve. Global flags live on the group (judgekit --config C --k2 5 run ...).
Every command exits 0 on success; failures print a single
"error: <Type>: <message>" line on stderr and exit nonzero. Output files
are UTF-8 JSON with sorted keys and no timestamps, so repeat runs with the
same seed and mock backends are byte-identical.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import wraps
from pathlib import Path

import click

from .backends import EmbeddingBackend
from .config import Config, build_embedding_backend
from .conclusion import IntermediateConclusion
from .corpus import load_case_corpus, load_law_corpus, save_case_corpus, save_law_corpus
from .errors import JudgekitError, MissingCorpusError, PairingError
from .extract import extract_elements, segment_text
from .metrics import MetricReport, aggregate, evaluate_pair
from .pipeline import PipelineEngine
from .retrieval import build_index
from .writer import DocumentSource, document_from_text

_STAGES = ("search", "prejudge", "write")


@dataclass(frozen=True)
class SweepResult:
    """Aggregate metric reports per swept k2 value."""

    k2_values: tuple[int, ...]
    per_k2: dict[int, dict]

    def __post_init__(self) -> None:
        if not self.k2_values:
            raise ValueError("k2_values must be non-empty")
        if any(k < 1 for k in self.k2_values):
            raise ValueError("k2 values must be positive")
        if set(self.per_k2) != set(self.k2_values):
            raise ValueError("per_k2 keys must equal k2_values")

    def to_dict(self) -> dict:
        return {
            "k2_values": list(self.k2_values),
            "per_k2": {str(k): self.per_k2[k] for k in self.k2_values},
        }


def _fail(exc: BaseException) -> "SystemExit":
    message = " ".join(str(exc).split()) or exc.__class__.__name__
    click.echo(f"error: {exc.__class__.__name__}: {message}", err=True)
    return SystemExit(1)


def _command(fn):
    """Wrap a command body so domain errors become one-line failures."""

    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (JudgekitError, OSError, ValueError, KeyError) as exc:
            raise _fail(exc) from exc

    return wrapper


def _dump(payload: dict) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _read_fact(path: Path) -> str:
    fact = path.read_text(encoding="utf-8").strip()
    if not fact:
        raise ValueError(f"fact file {path} is empty")
    return fact


class _Context:
    def __init__(self, config_path, seed, jobs, k1, k2, review, stage):
        self.config_path = config_path
        self._seed = seed
        self._jobs = jobs
        self.k1 = k1
        self.k2 = k2
        self.review = review
        self.stage = stage
        self._config: Config | None = None

    @property
    def config(self) -> Config:
        if self._config is None:
            if self.config_path is None:
                raise click.UsageError("--config is required for this command")
            cfg = Config.from_file(self.config_path)
            # prefer corpora normalized by `ingest` when they exist
            ingested_laws = Path(cfg.workdir) / "corpus" / "laws.jsonl"
            ingested_cases = Path(cfg.workdir) / "corpus" / "cases.jsonl"
            if ingested_laws.exists() and ingested_cases.exists():
                from dataclasses import replace

                cfg = replace(
                    cfg,
                    laws_path=str(ingested_laws),
                    cases_path=str(ingested_cases),
                )
            self._config = cfg
        return self._config

    @property
    def seed(self) -> int:
        if self._seed is not None:
            return self._seed
        if self.config_path is not None:
            return self.config.seed
        return 42

    @property
    def jobs(self) -> int:
        return self._jobs if self._jobs is not None else (os.cpu_count() or 1)

    def effective_stage(self) -> str:
        if self.stage is not None:
            return self.stage
        if self.review:
            return "prejudge"
        return "write"

    def engine(self) -> PipelineEngine:
        engine = PipelineEngine.from_config(self.config)
        return engine

    def embedder(self) -> EmbeddingBackend:
        cfg = self.config if self.config_path is not None else Config()
        return build_embedding_backend(cfg.embedding)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Path to the JSON config file.")
@click.option("--seed", type=int, default=None, show_default="42",
              help="Seed for anything randomized; recorded in outputs.")
@click.option("--jobs", type=click.IntRange(min=1), default=None,
              show_default="processor count", help="Batch concurrency.")
@click.option("--k1", type=click.IntRange(min=1), default=None,
              help="Candidate pool size for dense retrieval.")
@click.option("--k2", type=click.IntRange(min=1), default=None,
              help="Articles kept after reranking.")
@click.option("--review", is_flag=True, default=False,
              help="Halt after the intermediate conclusion.")
@click.option("--stage", type=click.Choice(_STAGES), default=None,
              help="Stop the pipeline after this stage.")
@click.pass_context
def cli(ctx, config_path, seed, jobs, k1, k2, review, stage):
    """Judgment pipeline: retrieve, conclude, write, evaluate."""
    ctx.obj = _Context(config_path, seed, jobs, k1, k2, review, stage)


main = cli


@cli.command()
@click.pass_obj
@_command
def ingest(obj: _Context):
    """Validate the configured corpora and copy them into the workdir."""
    cfg = Config.from_file(obj.config_path) if obj.config_path else None
    if cfg is None:
        raise click.UsageError("--config is required for this command")
    laws = load_law_corpus(cfg.laws_path)
    cases = load_case_corpus(cfg.cases_path)
    extraction_failures = 0
    for doc in cases:
        try:
            extract_elements(doc)
        except JudgekitError:
            extraction_failures += 1
    corpus_dir = Path(cfg.workdir) / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    save_law_corpus(laws, corpus_dir / "laws.jsonl")
    save_case_corpus(cases, corpus_dir / "cases.jsonl")
    click.echo(json.dumps({
        "laws": len(laws),
        "cases": len(cases),
        "extraction_failures": extraction_failures,
        "workdir": str(corpus_dir),
    }, ensure_ascii=False, sort_keys=True))


@cli.command()
@click.pass_obj
@_command
def index(obj: _Context):
    """Embed the ingested corpora and save dense indices."""
    cfg = obj.config
    corpus_dir = Path(cfg.workdir) / "corpus"
    if not (corpus_dir / "laws.jsonl").exists() or not (corpus_dir / "cases.jsonl").exists():
        raise MissingCorpusError(
            f"no ingested corpora under {corpus_dir}; run `judgekit ingest` first"
        )
    laws = load_law_corpus(corpus_dir / "laws.jsonl")
    cases = load_case_corpus(corpus_dir / "cases.jsonl")
    backend = build_embedding_backend(cfg.embedding)
    index_dir = Path(cfg.workdir) / "index"
    index_dir.mkdir(parents=True, exist_ok=True)
    law_index = build_index(laws, backend)
    case_index = build_index(cases, backend)
    law_index.save(index_dir / "laws.npz")
    case_index.save(index_dir / "cases.npz")
    click.echo(json.dumps({
        "laws": len(law_index),
        "cases": len(case_index),
        "dim": law_index.dim,
        "index_dir": str(index_dir),
    }, ensure_ascii=False, sort_keys=True))


def _stage_payload(engine: PipelineEngine, obj: _Context, fact: str, stage: str) -> dict:
    e_ref = engine.search(fact, k1=obj.k1, k2=obj.k2)
    payload: dict = {
        "seed": obj.seed,
        "k1": obj.k1 if obj.k1 is not None else engine.k1,
        "k2": obj.k2 if obj.k2 is not None else engine.k2,
        "e_ref": e_ref.to_dict(),
    }
    if stage in ("prejudge", "write"):
        j_pre = engine.prejudge(fact, e_ref)
        payload["j_pre"] = j_pre.to_dict()
    if stage == "write":
        document = engine.write(fact, j_pre, e_ref.c_doc)
        payload["document"] = document.to_dict()
    return payload


@cli.command()
@click.argument("fact_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the result here instead of stdout.")
@click.pass_obj
@_command
def search(obj: _Context, fact_file, out):
    """Retrieve referential elements for one fact."""
    engine = obj.engine()
    payload = _stage_payload(engine, obj, _read_fact(Path(fact_file)), "search")
    text = _dump(payload)
    if out:
        _atomic_write(Path(out), text)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.argument("fact_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the result here instead of stdout.")
@click.pass_obj
@_command
def prejudge(obj: _Context, fact_file, out):
    """Retrieve and form the intermediate conclusion for one fact."""
    engine = obj.engine()
    payload = _stage_payload(engine, obj, _read_fact(Path(fact_file)), "prejudge")
    text = _dump(payload)
    if out:
        _atomic_write(Path(out), text)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.argument("fact_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("conclusion_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the result here instead of stdout.")
@click.pass_obj
@_command
def write(obj: _Context, fact_file, conclusion_file, out):
    """Synthesize the final document from a fact and a conclusion file.

    The conclusion file is JSON as produced by `prejudge` (either the bare
    conclusion object or a payload with a j_pre key), possibly hand-edited.
    """
    engine = obj.engine()
    fact = _read_fact(Path(fact_file))
    data = json.loads(Path(conclusion_file).read_text(encoding="utf-8"))
    j_pre = IntermediateConclusion.from_dict(data.get("j_pre", data))
    e_ref = engine.search(fact, k1=obj.k1, k2=obj.k2)
    document = engine.write(fact, j_pre, e_ref.c_doc)
    payload = {
        "seed": obj.seed,
        "j_pre": j_pre.to_dict(),
        "document": document.to_dict(),
    }
    text = _dump(payload)
    if out:
        _atomic_write(Path(out), text)
    else:
        click.echo(text, nl=False)


def _run_one(engine: PipelineEngine, obj: _Context, fact_path: Path,
             out_dir: Path | None, stage: str) -> dict:
    payload = _stage_payload(engine, obj, _read_fact(fact_path), stage)
    if out_dir is not None:
        stem = fact_path.stem
        _atomic_write(out_dir / f"{stem}.json", _dump(payload))
        if "document" in payload:
            _atomic_write(out_dir / f"{stem}.txt", payload["document"]["full_text"])
    return payload


@cli.command()
@click.argument("fact_path", type=click.Path(exists=True))
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for per-fact outputs (required for a batch).")
@click.pass_obj
@_command
def run(obj: _Context, fact_path, out_dir):
    """Run the pipeline on one fact file or a directory of .txt facts."""
    engine = obj.engine()
    stage = obj.effective_stage()
    src = Path(fact_path)
    out = Path(out_dir) if out_dir else None
    if src.is_dir():
        if out is None:
            raise click.UsageError("--out-dir is required when FACT_PATH is a directory")
        fact_files = sorted(src.glob("*.txt"))
        if not fact_files:
            raise ValueError(f"no .txt fact files under {src}")
        with ThreadPoolExecutor(max_workers=obj.jobs) as pool:
            futures = [pool.submit(_run_one, engine, obj, p, out, stage)
                       for p in fact_files]
            for future in futures:
                future.result()
        click.echo(json.dumps({"facts": len(fact_files), "out_dir": str(out)},
                              ensure_ascii=False, sort_keys=True))
        return
    payload = _run_one(engine, obj, src, out, stage)
    if out is None:
        click.echo(_dump(payload), nl=False)
    else:
        click.echo(json.dumps({"facts": 1, "out_dir": str(out)},
                              ensure_ascii=False, sort_keys=True))


def _paired_stems(generated_dir: Path, gold_dir: Path) -> list[str]:
    gen = {p.stem for p in generated_dir.glob("*.txt")}
    gold = {p.stem for p in gold_dir.glob("*.txt")}
    if gen != gold:
        only_gen = sorted(gen - gold)
        only_gold = sorted(gold - gen)
        raise PairingError(
            f"generated/gold filename stems differ; "
            f"only generated: {only_gen}; only gold: {only_gold}"
        )
    if not gen:
        raise PairingError("no .txt files to pair")
    return sorted(gen)


def _evaluate_stem(embedder: EmbeddingBackend, generated_dir: Path,
                   gold_dir: Path, stem: str) -> MetricReport:
    generated = document_from_text(
        (generated_dir / f"{stem}.txt").read_text(encoding="utf-8"),
        source=DocumentSource.GENERATED,
    )
    gold = document_from_text(
        (gold_dir / f"{stem}.txt").read_text(encoding="utf-8"),
        source=DocumentSource.GENERATED,
    )
    return evaluate_pair(generated, gold, embedder)


@cli.command("eval")
@click.argument("generated_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("gold_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for report files (default: no files, stdout only).")
@click.pass_obj
@_command
def eval_cmd(obj: _Context, generated_dir, gold_dir, out_dir):
    """Score generated documents against gold documents, paired by stem."""
    embedder = obj.embedder()
    gen_dir, gld_dir = Path(generated_dir), Path(gold_dir)
    stems = _paired_stems(gen_dir, gld_dir)
    reports: dict[str, MetricReport] = {}
    with ThreadPoolExecutor(max_workers=obj.jobs) as pool:
        futures = {stem: pool.submit(_evaluate_stem, embedder, gen_dir, gld_dir, stem)
                   for stem in stems}
        for stem in stems:
            reports[stem] = futures[stem].result()
    combined = aggregate([reports[stem] for stem in stems])
    if out_dir:
        out = Path(out_dir)
        for stem in stems:
            _atomic_write(out / f"{stem}.report.json", _dump({
                "seed": obj.seed, "pair": stem, "report": reports[stem].to_dict(),
            }))
        _atomic_write(out / "aggregate.json", _dump({
            "seed": obj.seed, "n_documents": len(stems),
            "aggregate": combined.to_dict(),
        }))
    click.echo(json.dumps({
        "n_documents": len(stems), "aggregate": combined.to_dict(),
    }, ensure_ascii=False, sort_keys=True))


def _sweep_case(engine: PipelineEngine, obj: _Context, embedder: EmbeddingBackend,
                gold_dir: Path, stem: str, k2: int) -> MetricReport:
    gold_text = (gold_dir / f"{stem}.txt").read_text(encoding="utf-8")
    gold = document_from_text(gold_text, source=DocumentSource.GENERATED)
    fact = gold.fact_section
    exclude = None
    try:
        elements = extract_elements(gold)
        if elements.case_id and engine.has_case(elements.case_id):
            exclude = elements.case_id
    except JudgekitError:
        pass
    e_ref = engine.search(fact, k1=obj.k1, k2=k2, exclude_case_id=exclude)
    j_pre = engine.prejudge(fact, e_ref)
    document = engine.write(fact, j_pre, e_ref.c_doc)
    return evaluate_pair(document, gold, embedder)


@cli.command("sweep-k2")
@click.argument("gold_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--values", default="1,5,10,20", show_default=True,
              help="Comma-separated k2 values to sweep.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Sweep result file (default: <workdir>/sweep_k2.json).")
@click.pass_obj
@_command
def sweep_k2(obj: _Context, gold_dir, values, out):
    """Run the pipeline over gold documents at each k2 and aggregate.

    Facts are taken from the gold documents' fact sections; a gold document
    whose docket number matches a corpus case is excluded from its own
    precedent search.
    """
    try:
        k2_values = tuple(int(v) for v in values.split(",") if v.strip())
    except ValueError:
        raise click.UsageError(f"--values must be comma-separated integers, got {values!r}")
    if not k2_values or any(k < 1 for k in k2_values):
        raise click.UsageError("--values must be a non-empty list of positive integers")
    engine = obj.engine()
    embedder = obj.embedder()
    gld_dir = Path(gold_dir)
    stems = sorted(p.stem for p in gld_dir.glob("*.txt"))
    if not stems:
        raise ValueError(f"no .txt gold documents under {gld_dir}")
    per_k2: dict[int, dict] = {}
    for k2 in k2_values:
        try:
            reports: dict[str, MetricReport] = {}
            with ThreadPoolExecutor(max_workers=obj.jobs) as pool:
                futures = {
                    stem: pool.submit(_sweep_case, engine, obj, embedder,
                                      gld_dir, stem, k2)
                    for stem in stems
                }
                for stem in stems:
                    reports[stem] = futures[stem].result()
            combined = aggregate([reports[stem] for stem in stems])
            per_k2[k2] = {"n_documents": len(stems), "aggregate": combined.to_dict()}
        except (JudgekitError, OSError, ValueError, KeyError) as exc:
            per_k2[k2] = {"error": f"{exc.__class__.__name__}: {exc}"}
    result = SweepResult(k2_values=k2_values, per_k2=per_k2)
    payload = {"seed": obj.seed, **result.to_dict()}
    out_path = Path(out) if out else Path(obj.config.workdir) / "sweep_k2.json"
    _atomic_write(out_path, _dump(payload))
    click.echo(json.dumps({"k2_values": list(k2_values), "out": str(out_path)},
                          ensure_ascii=False, sort_keys=True))


@cli.command()
@click.option("--host", default=None, help="Bind host (default from config).")
@click.option("--port", type=int, default=None, help="Bind port (default from config).")
@click.pass_obj
@_command
def serve(obj: _Context, host, port):
    """Serve the HTTP API with a persistent job store in the workdir."""
    import uvicorn

    from .jobs import JobStore
    from .service import create_app

    cfg = obj.config
    engine = obj.engine()
    store = JobStore(cfg.workdir)
    app = create_app(engine, store)
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port,
                log_level="info")


if __name__ == "__main__":
    main()
