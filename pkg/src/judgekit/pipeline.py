"""The staged engine: search, pre-judge, write, evaluate.

One engine instance owns the loaded corpora, the dense indices (built once
at startup), and the configured backends. All state is read-only after
construction; generation calls are bounded by an in-flight semaphore so a
batch run cannot stampede a shared inference server.
"""

from __future__ import annotations

import threading
from typing import Sequence

from .backends import (
    EmbeddingBackend,
    GenerationBackend,
    GenerationParams,
    RerankBackend,
    probe_backend,
)
from .conclusion import (
    IntermediateConclusion,
    build_ice_prompt,
    emulate_conclusion,
)
from .config import (
    Config,
    build_embedding_backend,
    build_generation_backend,
    build_rerank_backend,
)
from .corpus import (
    CaseDocument,
    LawArticle,
    load_case_corpus,
    load_law_corpus,
)
from .errors import MissingCorpusError
from .metrics import MetricReport, evaluate_pair
from .retrieval import DenseIndex, ReferentialElements, build_index, rjer_search
from .writer import (
    DocumentTemplate,
    JudgmentDocument,
    build_jus_prompt,
    default_template,
    synthesize_document,
)

DEFAULT_INFLIGHT_LIMIT = 4


class PipelineEngine:
    def __init__(
        self,
        laws: Sequence[LawArticle],
        cases: Sequence[CaseDocument],
        embed_backend: EmbeddingBackend,
        rerank_backend: RerankBackend,
        ice_backend: GenerationBackend,
        jus_backend: GenerationBackend,
        template: DocumentTemplate | None = None,
        gen_params: GenerationParams | None = None,
        k1: int = 100,
        k2: int = 10,
        inflight_limit: int = DEFAULT_INFLIGHT_LIMIT,
    ):
        if not laws:
            raise MissingCorpusError("law corpus is empty")
        if not cases:
            raise MissingCorpusError("case corpus is empty")
        self.laws = tuple(laws)
        self.cases = tuple(cases)
        self.embed_backend = embed_backend
        self.rerank_backend = rerank_backend
        self.ice_backend = ice_backend
        self.jus_backend = jus_backend
        self.template = template or default_template()
        self.gen_params = gen_params or GenerationParams()
        self.k1 = k1
        self.k2 = k2
        self.law_index: DenseIndex = build_index(self.laws, embed_backend)
        self.case_index: DenseIndex = build_index(self.cases, embed_backend)
        self._gen_slots = threading.Semaphore(inflight_limit)

    @classmethod
    def from_config(cls, cfg: Config) -> "PipelineEngine":
        if not cfg.laws_path:
            raise MissingCorpusError("config has no laws_path")
        if not cfg.cases_path:
            raise MissingCorpusError("config has no cases_path")
        template = cfg.template()
        return cls(
            laws=load_law_corpus(cfg.laws_path),
            cases=load_case_corpus(cfg.cases_path),
            embed_backend=build_embedding_backend(cfg.embedding),
            rerank_backend=build_rerank_backend(cfg.reranker),
            ice_backend=build_generation_backend(cfg.ice_backend, template),
            jus_backend=build_generation_backend(cfg.jus_backend, template),
            template=template,
            gen_params=cfg.generation,
            k1=cfg.k1,
            k2=cfg.k2,
        )

    def search(
        self,
        fact: str,
        k1: int | None = None,
        k2: int | None = None,
        exclude_case_id: str | None = None,
    ) -> ReferentialElements:
        return rjer_search(
            fact,
            self.law_index,
            self.case_index,
            self.embed_backend,
            self.rerank_backend,
            k1=self.k1 if k1 is None else k1,
            k2=self.k2 if k2 is None else k2,
            exclude_case_id=exclude_case_id,
        )

    def prejudge(self, fact: str, e_ref: ReferentialElements) -> IntermediateConclusion:
        prompt = build_ice_prompt(fact, e_ref.e_case, e_ref.a_ext)
        with self._gen_slots:
            return emulate_conclusion(self.ice_backend, prompt, self.gen_params)

    def write(
        self,
        fact: str,
        j_pre: IntermediateConclusion,
        c_doc: CaseDocument,
    ) -> JudgmentDocument:
        prompt = build_jus_prompt(fact, j_pre, c_doc, self.template)
        with self._gen_slots:
            return synthesize_document(self.jus_backend, prompt, self.gen_params)

    def run(
        self,
        fact: str,
        k1: int | None = None,
        k2: int | None = None,
        exclude_case_id: str | None = None,
    ) -> tuple[ReferentialElements, IntermediateConclusion, JudgmentDocument]:
        e_ref = self.search(fact, k1=k1, k2=k2, exclude_case_id=exclude_case_id)
        j_pre = self.prejudge(fact, e_ref)
        document = self.write(fact, j_pre, e_ref.c_doc)
        return e_ref, j_pre, document

    def evaluate(self, gen, gold) -> MetricReport:
        return evaluate_pair(gen, gold, self.embed_backend)

    def article(self, article_id: str) -> LawArticle:
        return self.law_index.get(article_id)

    def case(self, case_id: str) -> CaseDocument:
        return self.case_index.get(case_id)

    def has_case(self, case_id: str) -> bool:
        try:
            self.case_index.get(case_id)
        except KeyError:
            return False
        return True

    def corpus_sizes(self) -> dict[str, int]:
        return {"laws": len(self.laws), "cases": len(self.cases)}

    def backend_health(self) -> dict[str, bool]:
        return {
            "embedding": probe_backend(self.embed_backend),
            "reranker": probe_backend(self.rerank_backend),
            "ice": probe_backend(self.ice_backend),
            "jus": probe_backend(self.jus_backend),
        }
