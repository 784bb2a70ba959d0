"""Judicial judgment pipeline: retrieve references, conclude, write, score.

The package mirrors a three-stage drafting workflow. Retrieval assembles a
precedent case and supplementary law articles for a fact description, the
pre-judge stage forms a small verifiable conclusion (charges, articles,
prison term, fine), and the writer renders the final judgment document.
A metric battery scores generated documents against gold ones, and the
service/CLI layers expose the whole thing with a reviewable job store.
"""

from .backends import (
    CharOverlapReranker,
    GenerationParams,
    HashEmbedder,
    HttpEmbeddingBackend,
    HttpGenerationBackend,
    HttpRerankBackend,
)
from .conclusion import (
    CopyPrecedentModel,
    IntermediateConclusion,
    Provenance,
    apply_human_edit,
    build_ice_prompt,
    emulate_conclusion,
    parse_conclusion,
    render_conclusion,
)
from .config import Config
from .corpus import (
    CaseDocument,
    LawArticle,
    corpus_stats,
    load_case_corpus,
    load_law_corpus,
    save_case_corpus,
    save_law_corpus,
)
from .errors import JudgekitError
from .extract import (
    CaseElements,
    FineAmount,
    FineKind,
    PrisonTerm,
    TermKind,
    extract_elements,
    segment_text,
)
from .jobs import Job, JobState, JobStore, advance_job, edit_conclusion, evaluate_job
from .metrics import (
    MetricReport,
    aggregate,
    evaluate_pair,
    fine_penalty_score,
    meteor_char,
    penalty_score,
    term_penalty_score,
)
from .pipeline import PipelineEngine
from .ranking import info_nce_gradient, info_nce_loss, lce_loss, sample_hard_negatives
from .retrieval import (
    DenseIndex,
    ReferentialElements,
    build_index,
    rjer_search,
    search_topk,
)
from .service import create_app
from .writer import (
    DocumentTemplate,
    JudgmentDocument,
    TemplateFillModel,
    build_jus_prompt,
    render_template,
    synthesize_document,
)

__version__ = "0.1.0"

__all__ = [
    "CaseDocument",
    "CaseElements",
    "CharOverlapReranker",
    "Config",
    "CopyPrecedentModel",
    "DenseIndex",
    "DocumentTemplate",
    "FineAmount",
    "FineKind",
    "GenerationParams",
    "HashEmbedder",
    "HttpEmbeddingBackend",
    "HttpGenerationBackend",
    "HttpRerankBackend",
    "IntermediateConclusion",
    "Job",
    "JobState",
    "JobStore",
    "JudgekitError",
    "JudgmentDocument",
    "LawArticle",
    "MetricReport",
    "PipelineEngine",
    "PrisonTerm",
    "Provenance",
    "ReferentialElements",
    "TemplateFillModel",
    "TermKind",
    "advance_job",
    "aggregate",
    "apply_human_edit",
    "build_index",
    "build_ice_prompt",
    "build_jus_prompt",
    "corpus_stats",
    "create_app",
    "edit_conclusion",
    "emulate_conclusion",
    "evaluate_job",
    "evaluate_pair",
    "extract_elements",
    "fine_penalty_score",
    "info_nce_gradient",
    "info_nce_loss",
    "lce_loss",
    "load_case_corpus",
    "load_law_corpus",
    "meteor_char",
    "parse_conclusion",
    "penalty_score",
    "render_conclusion",
    "render_template",
    "rjer_search",
    "sample_hard_negatives",
    "save_case_corpus",
    "save_law_corpus",
    "search_topk",
    "segment_text",
    "synthesize_document",
    "term_penalty_score",
]
