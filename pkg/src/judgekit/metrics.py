"""Evaluation battery over (generated, gold) judgment pairs.

Element scores: penalty accuracy for prison term and fine (1 minus the
normalized absolute deviation), set precision/recall/F1 for charges
(convicting) and cited articles (referencing). Text scores: a character
level METEOR variant and an embedding-greedy similarity, both over the
reasoning and the judgment-result sections.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .backends import EmbeddingBackend
from .errors import (
    EmptyInputError,
    ExtractionIncompleteError,
    NegativeInputError,
)
from .extract import FineAmount, FineKind, PrisonTerm, TermKind, extract_elements
from .retrieval import embed as embed_texts

# METEOR parameters: Fmean weight, chunk-penalty exponent and weight
_ALPHA = 0.9
_BETA = 3.0
_GAMMA = 0.5

# exact chunk minimization is exponential; beyond this length use the
# greedy longest-tile approximation
_EXACT_ALIGN_LIMIT = 10


def penalty_score(v_gen: float, v_gt: float) -> float:
    """1 - |v_gen - v_gt| / max(v_gen, v_gt); equal values score 1."""
    if v_gen < 0 or v_gt < 0:
        raise NegativeInputError(f"penalty inputs must be >= 0: {v_gen}, {v_gt}")
    if v_gen == v_gt:
        return 1.0
    return 1.0 - abs(v_gen - v_gt) / max(v_gen, v_gt)


def term_penalty_score(t_gen: PrisonTerm, t_gt: PrisonTerm) -> float:
    """Month-scalar penalty for same-kind terms; kind mismatch scores 0."""
    if t_gen.kind != t_gt.kind:
        return 0.0
    if t_gen.kind in (TermKind.FIXED_TERM, TermKind.DETENTION):
        return penalty_score(t_gen.months, t_gt.months)
    return 1.0


def fine_penalty_score(f_gen: FineAmount, f_gt: FineAmount) -> float:
    """Yuan-scalar penalty for amount fines; kind mismatch scores 0."""
    if f_gen.kind != f_gt.kind:
        return 0.0
    if f_gen.kind is FineKind.AMOUNT:
        return penalty_score(f_gen.cny, f_gt.cny)
    return 1.0


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}

    @classmethod
    def from_dict(cls, d: dict) -> "PRF":
        return cls(d["precision"], d["recall"], d["f1"])


def set_prf(pred: set, gold: set) -> PRF:
    hit = len(set(pred) & set(gold))
    precision = hit / len(pred) if pred else 0.0
    recall = hit / len(gold) if gold else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return PRF(precision, recall, f1)


def _match_count(candidate: str, reference: str) -> int:
    # maximum alignment size is forced per character: min of the two counts
    total = 0
    for ch in set(candidate):
        total += min(candidate.count(ch), reference.count(ch))
    return total


def _min_chunks_exact(candidate: str, reference: str, matches: int) -> int:
    """Exhaustive minimal chunk count over all maximum alignments."""
    ref_positions: dict[str, list[int]] = {}
    for j, ch in enumerate(reference):
        ref_positions.setdefault(ch, []).append(j)
    # how many occurrences of each candidate char may stay unmatched
    skip_budget = {
        ch: candidate.count(ch) - min(candidate.count(ch), reference.count(ch))
        for ch in set(candidate)
    }
    n = len(candidate)
    best = matches + 1

    def dfs(i: int, used: set[int], prev_pair: tuple[int, int] | None,
            chunks: int, skips: dict[str, int]) -> None:
        nonlocal best
        if chunks >= best:
            return
        if i == n:
            best = min(best, chunks)
            return
        ch = candidate[i]
        for j in ref_positions.get(ch, ()):
            if j in used:
                continue
            contiguous = (
                prev_pair is not None
                and prev_pair[0] == i - 1
                and prev_pair[1] == j - 1
            )
            used.add(j)
            dfs(i + 1, used, (i, j), chunks + (0 if contiguous else 1), skips)
            used.remove(j)
        if skips.get(ch, 0) > 0:
            skips[ch] -= 1
            dfs(i + 1, used, prev_pair, chunks, skips)
            skips[ch] += 1

    dfs(0, set(), None, 0, dict(skip_budget))
    return best


def _min_chunks_greedy(candidate: str, reference: str, matches: int) -> int:
    """Longest-tile-first approximation of the minimal chunk count.

    Repeatedly consumes the longest substring common to the unconsumed
    position ranges of both strings; leftovers pair char-by-char, each its
    own chunk. Total matched characters stay at the maximum regardless of
    tiling order, so only the chunk count is approximate.
    """
    cand = np.frombuffer(candidate.encode("utf-32-le"), dtype=np.uint32)
    ref = np.frombuffer(reference.encode("utf-32-le"), dtype=np.uint32)
    avail_c = np.ones(len(cand), dtype=bool)
    avail_r = np.ones(len(ref), dtype=bool)
    chunks = 0
    consumed = 0
    while True:
        eq = (cand[:, None] == ref[None, :]) & avail_c[:, None] & avail_r[None, :]
        if not eq.any():
            break
        run = np.zeros(eq.shape, dtype=np.int32)
        run[0, :] = eq[0, :]
        for i in range(1, eq.shape[0]):
            run[i, 1:] = np.where(eq[i, 1:], run[i - 1, :-1] + 1, 0)
            run[i, 0] = eq[i, 0]
        length = int(run.max())
        if length < 2:
            break
        i_end, j_end = np.unravel_index(int(run.argmax()), run.shape)
        avail_c[i_end - length + 1:i_end + 1] = False
        avail_r[j_end - length + 1:j_end + 1] = False
        chunks += 1
        consumed += length
    return chunks + (matches - consumed)


def meteor_char(candidate: str, reference: str) -> float:
    """Character-level METEOR: exact-match alignment, chunk fragmentation
    penalty, no synonym or stemming stages."""
    if not candidate or not reference:
        return 0.0
    matches = _match_count(candidate, reference)
    if matches == 0:
        return 0.0
    if max(len(candidate), len(reference)) <= _EXACT_ALIGN_LIMIT:
        chunks = _min_chunks_exact(candidate, reference, matches)
    else:
        chunks = _min_chunks_greedy(candidate, reference, matches)
    precision = matches / len(candidate)
    recall = matches / len(reference)
    fmean = precision * recall / (_ALPHA * precision + (1 - _ALPHA) * recall)
    penalty = _GAMMA * (chunks / matches) ** _BETA
    return fmean * (1.0 - penalty)


def embed_sim(candidate: str, reference: str, backend: EmbeddingBackend) -> PRF:
    """Greedy max-cosine matching over per-character embeddings."""
    if not candidate or not reference:
        return PRF(0.0, 0.0, 0.0)
    uniq = sorted(set(candidate) | set(reference))
    vectors = embed_texts(backend, uniq)
    norms = np.linalg.norm(vectors, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = vectors / safe[:, None]
    unit[norms == 0] = 0.0
    cos = unit @ unit.T
    idx = {ch: i for i, ch in enumerate(uniq)}
    cand_idx = np.array([idx[c] for c in candidate])
    ref_idx = np.array([idx[c] for c in reference])
    sub = cos[np.ix_(cand_idx, ref_idx)]
    precision = float(np.clip(sub.max(axis=1), 0.0, 1.0).mean())
    recall = float(np.clip(sub.max(axis=0), 0.0, 1.0).mean())
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return PRF(precision, recall, f1)


@dataclass(frozen=True)
class TextSim:
    meteor_char: float
    embed_sim: float

    def to_dict(self) -> dict[str, float]:
        return {"meteor_char": self.meteor_char, "embed_sim": self.embed_sim}

    @classmethod
    def from_dict(cls, d: dict) -> "TextSim":
        return cls(d["meteor_char"], d["embed_sim"])


@dataclass(frozen=True)
class MetricReport:
    prison_acc: float
    fine_acc: float
    convicting: PRF
    referencing: PRF
    reasoning_sim: TextSim
    result_sim: TextSim

    def to_dict(self) -> dict[str, Any]:
        return {
            "prison_acc": self.prison_acc,
            "fine_acc": self.fine_acc,
            "convicting": self.convicting.to_dict(),
            "referencing": self.referencing.to_dict(),
            "reasoning_sim": self.reasoning_sim.to_dict(),
            "result_sim": self.result_sim.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            prison_acc=d["prison_acc"],
            fine_acc=d["fine_acc"],
            convicting=PRF.from_dict(d["convicting"]),
            referencing=PRF.from_dict(d["referencing"]),
            reasoning_sim=TextSim.from_dict(d["reasoning_sim"]),
            result_sim=TextSim.from_dict(d["result_sim"]),
        )


def evaluate_pair(gen, gold, backend: EmbeddingBackend) -> MetricReport:
    """Score a generated document against its gold counterpart.

    Both arguments may be CaseDocument or JudgmentDocument values; elements
    are re-extracted from the text on both sides, so the generated document
    is scored on what it actually says.
    """
    e_gen = _extract_side(gen, "generated")
    e_gold = _extract_side(gold, "gold")
    return MetricReport(
        prison_acc=term_penalty_score(e_gen.term, e_gold.term),
        fine_acc=fine_penalty_score(e_gen.fine, e_gold.fine),
        convicting=set_prf(set(e_gen.charges), set(e_gold.charges)),
        referencing=set_prf(set(e_gen.articles), set(e_gold.articles)),
        reasoning_sim=TextSim(
            meteor_char(gen.reasoning, gold.reasoning),
            embed_sim(gen.reasoning, gold.reasoning, backend).f1,
        ),
        result_sim=TextSim(
            meteor_char(gen.judgment_result, gold.judgment_result),
            embed_sim(gen.judgment_result, gold.judgment_result, backend).f1,
        ),
    )


def _extract_side(doc, side: str):
    try:
        return extract_elements(doc)
    except ExtractionIncompleteError as exc:
        raise ExtractionIncompleteError(
            exc.field, f"{side} document {exc.case_id}".strip()
        ) from None


def aggregate(reports: Sequence[MetricReport]) -> MetricReport:
    """Macro average: field-wise arithmetic mean over documents."""
    if not reports:
        raise EmptyInputError("cannot aggregate zero reports")

    def mean(get) -> float:
        # exact rational mean: permutation-invariant, identity on uniform lists
        return float(statistics.mean(get(r) for r in reports))

    def mean_prf(get) -> PRF:
        return PRF(
            precision=mean(lambda r: get(r).precision),
            recall=mean(lambda r: get(r).recall),
            f1=mean(lambda r: get(r).f1),
        )

    def mean_sim(get) -> TextSim:
        return TextSim(
            meteor_char=mean(lambda r: get(r).meteor_char),
            embed_sim=mean(lambda r: get(r).embed_sim),
        )

    return MetricReport(
        prison_acc=mean(lambda r: r.prison_acc),
        fine_acc=mean(lambda r: r.fine_acc),
        convicting=mean_prf(lambda r: r.convicting),
        referencing=mean_prf(lambda r: r.referencing),
        reasoning_sim=mean_sim(lambda r: r.reasoning_sim),
        result_sim=mean_sim(lambda r: r.result_sim),
    )
