"""HTTP face of the pipeline: job lifecycle, search, evaluation, health.

All endpoints speak JSON. Error translation is centralized: unknown ids map
to 404, state-machine refusals and stale edits to 409, malformed payloads
and rejected edits to 422, unreachable generation/embedding services to 502.
"""

from __future__ import annotations

import logging
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import (
    BackendUnavailableError,
    ConclusionParseError,
    ConflictError,
    ExtractionIncompleteError,
    InvalidEditError,
    InvalidStateError,
    InvalidTransitionError,
    JobNotFoundError,
    MalformedDocumentError,
)
from .jobs import JobStore, advance_job, edit_conclusion, evaluate_job
from .pipeline import PipelineEngine
from .writer import DocumentSource, document_from_text

log = logging.getLogger(__name__)


class CreateJobRequest(BaseModel):
    fact: str
    review_mode: bool = False
    k1: int | None = Field(default=None, ge=1)
    k2: int | None = Field(default=None, ge=1)


class AdvanceRequest(BaseModel):
    target_stage: str
    review_mode: bool | None = None
    k1: int | None = Field(default=None, ge=1)
    k2: int | None = Field(default=None, ge=1)
    edited_conclusion: dict[str, Any] | None = None


class ConclusionPatchRequest(BaseModel):
    patch: dict[str, Any]
    expected_version: int | None = None


class EvaluatePairRequest(BaseModel):
    generated_text: str
    gold_text: str


class EvaluateJobRequest(BaseModel):
    gold_text: str


class SearchRequest(BaseModel):
    fact: str
    k1: int | None = Field(default=None, ge=1)
    k2: int | None = Field(default=None, ge=1)


_ERROR_STATUS: tuple[tuple[type[Exception], int], ...] = (
    (JobNotFoundError, 404),
    (KeyError, 404),
    (InvalidTransitionError, 409),
    (ConflictError, 409),
    (InvalidStateError, 409),
    (InvalidEditError, 422),
    (ConclusionParseError, 422),
    (MalformedDocumentError, 422),
    (ExtractionIncompleteError, 422),
    (BackendUnavailableError, 502),
    (ValueError, 422),
)


def _make_handler(status: int):
    async def handler(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={
                "error": exc.__class__.__name__,
                "detail": str(exc) or exc.__class__.__name__,
            },
        )

    return handler


def create_app(engine: PipelineEngine, store: JobStore) -> FastAPI:
    app = FastAPI(title="judgekit", docs_url=None, redoc_url=None)

    # Starlette picks the handler by walking the exception's MRO, so the
    # most specific registered class wins over the ValueError fallback.
    for exc_type, status in _ERROR_STATUS:
        app.add_exception_handler(exc_type, _make_handler(status))

    # FastAPI runs sync endpoints on a thread pool; the store's per-job
    # locks make concurrent advances/edits on one job safe.

    @app.post("/v1/jobs", status_code=201)
    def create_job(req: CreateJobRequest) -> dict:
        job = store.create(
            req.fact, review_mode=req.review_mode, k1=req.k1, k2=req.k2
        )
        return job.to_dict()

    @app.post("/v1/jobs/{job_id}/advance")
    def advance(job_id: str, req: AdvanceRequest) -> dict:
        job = advance_job(
            store, engine, job_id, req.target_stage,
            review_mode=req.review_mode, k1=req.k1, k2=req.k2,
            edited_patch=req.edited_conclusion,
        )
        return job.to_dict()

    @app.put("/v1/jobs/{job_id}/conclusion")
    def put_conclusion(job_id: str, req: ConclusionPatchRequest) -> dict:
        job = edit_conclusion(
            store, job_id, req.patch, expected_version=req.expected_version
        )
        return job.to_dict()

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        return store.get(job_id).to_dict()

    @app.get("/v1/jobs")
    def list_jobs(state: str | None = None) -> list[dict]:
        return [job.to_dict() for job in store.list_jobs(state=state)]

    @app.post("/v1/jobs/{job_id}/evaluate")
    def evaluate_one_job(job_id: str, req: EvaluateJobRequest) -> dict:
        gold = document_from_text(req.gold_text, source=DocumentSource.GENERATED)
        job = evaluate_job(store, engine, job_id, gold)
        return job.to_dict()

    @app.post("/v1/evaluate")
    def evaluate_pair(req: EvaluatePairRequest) -> dict:
        generated = document_from_text(
            req.generated_text, source=DocumentSource.GENERATED
        )
        gold = document_from_text(req.gold_text, source=DocumentSource.GENERATED)
        return engine.evaluate(generated, gold).to_dict()

    @app.post("/v1/search")
    def search(req: SearchRequest) -> dict:
        if not req.fact.strip():
            raise ValueError("fact must be non-empty")
        return engine.search(req.fact, k1=req.k1, k2=req.k2).to_dict()

    @app.get("/v1/articles/{article_id}")
    def get_article(article_id: str) -> dict:
        article = engine.article(article_id)
        return {
            "id": article.id,
            "law_name": article.law_name,
            "article_no": article.article_no,
            "sub_no": article.sub_no,
            "text": article.text,
        }

    @app.get("/v1/cases/{case_id}")
    def get_case(case_id: str) -> dict:
        doc = engine.case(case_id)
        return {
            "case_id": doc.case_id,
            "heading": doc.heading,
            "fact": doc.fact,
            "reasoning": doc.reasoning,
            "judgment_result": doc.judgment_result,
        }

    @app.get("/healthz")
    def healthz() -> dict:
        sizes = engine.corpus_sizes()
        backends = engine.backend_health()
        status = "ok" if all(backends.values()) else "degraded"
        return {"status": status, "corpus": sizes, "backends": backends}

    return app
