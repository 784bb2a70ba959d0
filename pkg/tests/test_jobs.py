"""Job state machine, option overrides, and crash-safe persistence."""

import json

import pytest

from judgekit.conclusion import Provenance
from judgekit.errors import (
    ConflictError,
    InvalidStateError,
    InvalidTransitionError,
    JobNotFoundError,
    StoreError,
)
from judgekit.extract import PrisonTerm, extract_elements
from judgekit.jobs import (
    SNAPSHOT_EVERY,
    Job,
    JobState,
    JobStore,
    advance_job,
    edit_conclusion,
    evaluate_job,
)
from judgekit.writer import render_template

from _fixtures import fixture_elements, fixture_engine


@pytest.fixture(scope="module")
def engine():
    return fixture_engine()


FACT = "被告人某3于夜间在本市第3区窃取他人财物，数额情节均已查明。"


# ---- creation and lookup ----

def test_create_and_get(engine):
    store = JobStore()
    job = store.create(FACT)
    assert job.state is JobState.CREATED
    assert job.job_id.startswith("job-")
    assert job.version == 1
    assert "Created" in job.timestamps
    assert store.get(job.job_id) == job


def test_create_rejects_empty_fact():
    store = JobStore()
    with pytest.raises(ValueError):
        store.create("   ")


def test_get_unknown_job():
    with pytest.raises(JobNotFoundError):
        JobStore().get("job-missing")


def test_list_jobs_filters_and_sorts(engine):
    store = JobStore()
    a = store.create(FACT)
    b = store.create(FACT, review_mode=True)
    advance_job(store, engine, b.job_id, JobState.SEARCHED)
    assert [j.job_id for j in store.list_jobs()] == [a.job_id, b.job_id]
    assert [j.job_id for j in store.list_jobs(JobState.SEARCHED)] == [b.job_id]
    assert store.list_jobs("Written") == []


# ---- forward transitions ----

def test_advance_step_by_step(engine):
    store = JobStore()
    job = store.create(FACT)
    job = advance_job(store, engine, job.job_id, "Searched")
    assert job.state is JobState.SEARCHED
    assert job.e_ref is not None and job.j_pre is None
    job = advance_job(store, engine, job.job_id, "PreJudged")
    assert job.state is JobState.PREJUDGED
    assert job.j_pre is not None and job.document is None
    job = advance_job(store, engine, job.job_id, "Written")
    assert job.state is JobState.WRITTEN
    assert job.document is not None
    # fixture precedents share the fact layout, so extraction must agree
    assert extract_elements(job.document).charges == set(job.j_pre.charges)


def test_advance_straight_to_written(engine):
    store = JobStore()
    job = store.create(FACT)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    assert job.state is JobState.WRITTEN
    for key in ("Created", "Searched", "PreJudged", "Written"):
        assert key in job.timestamps


def test_advance_rejects_backwards(engine):
    store = JobStore()
    job = store.create(FACT)
    advance_job(store, engine, job.job_id, JobState.PREJUDGED)
    with pytest.raises(InvalidTransitionError):
        advance_job(store, engine, job.job_id, JobState.SEARCHED)


def test_advance_rejects_terminal_states(engine):
    store = JobStore()
    job = store.create(FACT)
    advance_job(store, engine, job.job_id, JobState.WRITTEN)
    with pytest.raises(InvalidTransitionError):
        advance_job(store, engine, job.job_id, JobState.WRITTEN)


def test_advance_rejects_created_target(engine):
    store = JobStore()
    job = store.create(FACT)
    with pytest.raises(InvalidTransitionError):
        advance_job(store, engine, job.job_id, JobState.CREATED)
    with pytest.raises(ValueError):
        advance_job(store, engine, job.job_id, "Skipped")


# ---- option overrides ----

def test_overrides_before_search(engine):
    store = JobStore()
    job = store.create(FACT)
    job = advance_job(store, engine, job.job_id, "Searched", k1=15, k2=3)
    assert (job.k1, job.k2) == (15, 3)
    assert len(job.e_ref.a_ext) <= 3


def test_k_overrides_locked_after_search(engine):
    store = JobStore()
    job = store.create(FACT)
    job = advance_job(store, engine, job.job_id, "Searched", k2=3)
    with pytest.raises(InvalidStateError):
        advance_job(store, engine, job.job_id, "Written", k2=4)
    # restating the same value is a no-op, not a conflict
    job = advance_job(store, engine, job.job_id, "Written", k2=3)
    assert job.state is JobState.WRITTEN


def test_review_mode_can_change_until_prejudged(engine):
    store = JobStore()
    job = store.create(FACT)
    job = advance_job(store, engine, job.job_id, "PreJudged", review_mode=True)
    assert job.review_mode
    job = advance_job(store, engine, job.job_id, "AwaitingReview")
    with pytest.raises(InvalidStateError):
        advance_job(store, engine, job.job_id, "Written", review_mode=False)


def test_awaiting_review_needs_review_mode(engine):
    store = JobStore()
    job = store.create(FACT)
    with pytest.raises(InvalidTransitionError):
        advance_job(store, engine, job.job_id, JobState.AWAITING_REVIEW)


# ---- review flow ----

def test_review_mode_parks_then_resumes(engine):
    store = JobStore()
    job = store.create(FACT, review_mode=True)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    assert job.state is JobState.AWAITING_REVIEW  # parked short of target
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    assert job.state is JobState.WRITTEN


def test_edit_conclusion_flows_into_document(engine):
    store = JobStore()
    job = store.create(FACT, review_mode=True)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    job = edit_conclusion(store, job.job_id, {"term": "有期徒刑二年"})
    assert job.j_pre.term == PrisonTerm.fixed(24)
    assert job.j_pre.provenance is Provenance.HUMAN_EDITED
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    assert extract_elements(job.document).term == PrisonTerm.fixed(24)


def test_edit_patch_on_advance(engine):
    store = JobStore()
    job = store.create(FACT, review_mode=True)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN,
                      edited_patch={"fine": 8000})
    assert job.state is JobState.WRITTEN
    assert extract_elements(job.document).fine.cny == 8000


def test_edit_patch_outside_review_rejected(engine):
    store = JobStore()
    job = store.create(FACT)
    with pytest.raises(InvalidStateError):
        advance_job(store, engine, job.job_id, JobState.WRITTEN,
                    edited_patch={"fine": 8000})


def test_edit_conclusion_requires_parked_job(engine):
    store = JobStore()
    job = store.create(FACT)
    with pytest.raises(ConflictError):
        edit_conclusion(store, job.job_id, {"fine": 1})
    advance_job(store, engine, job.job_id, JobState.WRITTEN)
    with pytest.raises(ConflictError):
        edit_conclusion(store, job.job_id, {"fine": 1})


def test_stale_edit_conflicts(engine):
    store = JobStore()
    job = store.create(FACT, review_mode=True)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    seen = job.version
    edit_conclusion(store, job.job_id, {"fine": 100}, expected_version=seen)
    with pytest.raises(ConflictError):
        edit_conclusion(store, job.job_id, {"fine": 200}, expected_version=seen)


def test_versions_increase_monotonically(engine):
    store = JobStore()
    job = store.create(FACT, review_mode=True)
    assert job.version == 1
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    assert job.version == 4  # searched, prejudged, awaiting_review
    job = edit_conclusion(store, job.job_id, {"fine": 100})
    assert job.version == 5
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    assert job.version == 6


# ---- failures ----

class _ExplodingEngine:
    def __init__(self, inner, fail_stage):
        self._inner = inner
        self._fail_stage = fail_stage

    def search(self, fact, k1=None, k2=None):
        if self._fail_stage == "search":
            raise RuntimeError("index offline")
        return self._inner.search(fact, k1=k1, k2=k2)

    def prejudge(self, fact, e_ref):
        if self._fail_stage == "prejudge":
            raise RuntimeError("backend died")
        return self._inner.prejudge(fact, e_ref)

    def write(self, fact, j_pre, c_doc):
        if self._fail_stage == "write":
            raise RuntimeError("backend died")
        return self._inner.write(fact, j_pre, c_doc)


def test_stage_failure_marks_job_failed(engine):
    store = JobStore()
    job = store.create(FACT)
    job = advance_job(
        store, _ExplodingEngine(engine, "prejudge"), job.job_id, JobState.WRITTEN)
    assert job.state is JobState.FAILED
    assert job.error == {"stage": "prejudge", "message": "backend died"}
    assert job.e_ref is not None  # search results are kept
    with pytest.raises(InvalidTransitionError):
        advance_job(store, engine, job.job_id, JobState.WRITTEN)


def test_failed_job_is_listable(engine):
    store = JobStore()
    job = store.create(FACT)
    advance_job(store, _ExplodingEngine(engine, "search"), job.job_id, "Searched")
    assert [j.job_id for j in store.list_jobs(JobState.FAILED)] == [job.job_id]


# ---- evaluation ----

def test_evaluate_job(engine):
    store = JobStore()
    job = store.create(FACT)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    gold = render_template(fixture_elements(3, "case-3"))
    job = evaluate_job(store, engine, job.job_id, gold)
    assert job.report is not None
    assert 0.0 <= job.report.prison_acc <= 1.0
    assert 0.0 <= job.report.convicting.f1 <= 1.0


def test_evaluate_requires_written(engine):
    store = JobStore()
    job = store.create(FACT)
    gold = render_template(fixture_elements(3, "case-3"))
    with pytest.raises(InvalidStateError):
        evaluate_job(store, engine, job.job_id, gold)


# ---- validation invariants ----

def test_job_validate_rejects_inconsistency():
    good = Job(job_id="j", fact="f", state=JobState.CREATED)
    good.validate()
    with pytest.raises(StoreError):
        Job(job_id="j", fact="f", state=JobState.SEARCHED).validate()
    with pytest.raises(StoreError):
        Job(job_id="j", fact="f", state=JobState.FAILED).validate()
    with pytest.raises(StoreError):
        Job(job_id="j", fact="f", state=JobState.CREATED, version=0).validate()


# ---- persistence ----

def test_store_replays_from_disk(tmp_path, engine):
    store = JobStore(tmp_path)
    job = store.create(FACT, review_mode=True)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    job = edit_conclusion(store, job.job_id, {"term": 30})
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)

    reloaded = JobStore(tmp_path)
    assert reloaded.get(job.job_id).to_dict() == job.to_dict()


def test_store_snapshot_plus_tail(tmp_path, engine):
    store = JobStore(tmp_path)
    job = store.create(FACT, review_mode=True)
    job = advance_job(store, engine, job.job_id, JobState.WRITTEN)
    for i in range(SNAPSHOT_EVERY):
        job = edit_conclusion(store, job.job_id, {"fine": 100 + i})
    snap = tmp_path / "jobs" / f"{job.job_id}.snapshot.json"
    assert snap.exists()
    assert json.loads(snap.read_text(encoding="utf-8"))["seq"] >= SNAPSHOT_EVERY

    reloaded = JobStore(tmp_path)
    assert reloaded.get(job.job_id).to_dict() == job.to_dict()


def test_store_drops_torn_tail(tmp_path, engine):
    store = JobStore(tmp_path)
    job = store.create(FACT)
    job = advance_job(store, engine, job.job_id, JobState.PREJUDGED)
    events = tmp_path / "jobs" / f"{job.job_id}.events.jsonl"
    with open(events, "a", encoding="utf-8") as fh:
        fh.write('{"seq": 99, "job": {"trunc')  # crash mid-append

    reloaded = JobStore(tmp_path)
    assert reloaded.get(job.job_id).to_dict() == job.to_dict()


def test_store_skips_unrecoverable_job(tmp_path, engine):
    store = JobStore(tmp_path)
    ok = store.create(FACT)
    bad = store.create(FACT)
    events = tmp_path / "jobs" / f"{bad.job_id}.events.jsonl"
    events.write_text('{"seq": 1, "job": {"job_id": "x"}}\n', encoding="utf-8")

    reloaded = JobStore(tmp_path)
    reloaded.get(ok.job_id)
    with pytest.raises(JobNotFoundError):
        reloaded.get(bad.job_id)
