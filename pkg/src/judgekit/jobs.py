"""Jobs: the reviewable pipeline state machine and its persistent store.

A job walks Created -> Searched -> PreJudged -> (AwaitingReview ->)? Written,
or drops to Failed from any running stage. Persistence is an append-only
JSON-lines event log per job plus a periodic snapshot; every event carries
the full job state after the event, so crash recovery is: load snapshot,
apply newer events, done. A torn final line (crash mid-append) is dropped.

Writes are serialized per job_id; reads are lock-free against the in-memory
map and re-validate state/field consistency every time.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from .conclusion import IntermediateConclusion, apply_human_edit
from .errors import (
    ConflictError,
    InvalidStateError,
    InvalidTransitionError,
    JobNotFoundError,
    StoreError,
)
from .metrics import MetricReport
from .retrieval import ReferentialElements
from .writer import JudgmentDocument

log = logging.getLogger(__name__)

SNAPSHOT_EVERY = 8


class JobState(str, Enum):
    CREATED = "Created"
    SEARCHED = "Searched"
    PREJUDGED = "PreJudged"
    AWAITING_REVIEW = "AwaitingReview"
    WRITTEN = "Written"
    FAILED = "Failed"


STAGE_RANK = {
    JobState.CREATED: 0,
    JobState.SEARCHED: 1,
    JobState.PREJUDGED: 2,
    JobState.AWAITING_REVIEW: 3,
    JobState.WRITTEN: 4,
}

ADVANCE_TARGETS = (
    JobState.SEARCHED,
    JobState.PREJUDGED,
    JobState.AWAITING_REVIEW,
    JobState.WRITTEN,
)


@dataclass(frozen=True)
class Job:
    job_id: str
    fact: str
    state: JobState
    review_mode: bool = False
    k1: int | None = None
    k2: int | None = None
    e_ref: ReferentialElements | None = None
    j_pre: IntermediateConclusion | None = None
    document: JudgmentDocument | None = None
    report: MetricReport | None = None
    timestamps: dict[str, float] = field(default_factory=dict)
    error: dict[str, str] | None = None
    version: int = 1

    def validate(self) -> None:
        """Field/state consistency; raises StoreError when violated."""
        if self.version < 1:
            raise StoreError(f"job {self.job_id}: version {self.version} < 1")
        if self.state is JobState.FAILED:
            if not self.error or not self.error.get("stage"):
                raise StoreError(f"job {self.job_id}: Failed without error info")
            if self.document is not None:
                raise StoreError(f"job {self.job_id}: Failed job holds a document")
            if self.j_pre is not None and self.e_ref is None:
                raise StoreError(f"job {self.job_id}: j_pre without e_ref")
            return
        if self.error is not None:
            raise StoreError(f"job {self.job_id}: error set in state {self.state.value}")
        rank = STAGE_RANK[self.state]
        if (self.e_ref is not None) != (rank >= 1):
            raise StoreError(f"job {self.job_id}: e_ref inconsistent with {self.state.value}")
        if (self.j_pre is not None) != (rank >= 2):
            raise StoreError(f"job {self.job_id}: j_pre inconsistent with {self.state.value}")
        if (self.document is not None) != (self.state is JobState.WRITTEN):
            raise StoreError(f"job {self.job_id}: document inconsistent with {self.state.value}")
        if self.report is not None and self.document is None:
            raise StoreError(f"job {self.job_id}: report without document")

    def to_dict(self) -> dict[str, Any]:
        return {
            "job_id": self.job_id,
            "fact": self.fact,
            "state": self.state.value,
            "review_mode": self.review_mode,
            "k1": self.k1,
            "k2": self.k2,
            "e_ref": self.e_ref.to_dict() if self.e_ref else None,
            "j_pre": self.j_pre.to_dict() if self.j_pre else None,
            "document": self.document.to_dict() if self.document else None,
            "report": self.report.to_dict() if self.report else None,
            "timestamps": dict(self.timestamps),
            "error": dict(self.error) if self.error else None,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Job":
        return cls(
            job_id=d["job_id"],
            fact=d["fact"],
            state=JobState(d["state"]),
            review_mode=bool(d.get("review_mode", False)),
            k1=d.get("k1"),
            k2=d.get("k2"),
            e_ref=ReferentialElements.from_dict(d["e_ref"]) if d.get("e_ref") else None,
            j_pre=IntermediateConclusion.from_dict(d["j_pre"]) if d.get("j_pre") else None,
            document=JudgmentDocument.from_dict(d["document"]) if d.get("document") else None,
            report=MetricReport.from_dict(d["report"]) if d.get("report") else None,
            timestamps=dict(d.get("timestamps", {})),
            error=dict(d["error"]) if d.get("error") else None,
            version=int(d.get("version", 1)),
        )


class JobStore:
    """In-memory job map with optional event-log persistence."""

    def __init__(self, root: str | Path | None = None):
        self._root = Path(root) / "jobs" if root else None
        self._jobs: dict[str, Job] = {}
        self._seqs: dict[str, int] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._mutex = threading.Lock()
        if self._root is not None:
            self._root.mkdir(parents=True, exist_ok=True)
            self._load_all()

    # ---- public API ----

    def create(
        self,
        fact: str,
        review_mode: bool = False,
        k1: int | None = None,
        k2: int | None = None,
    ) -> Job:
        if not fact.strip():
            raise ValueError("fact must be non-empty")
        job = Job(
            job_id="job-" + uuid.uuid4().hex[:12],
            fact=fact,
            state=JobState.CREATED,
            review_mode=review_mode,
            k1=k1,
            k2=k2,
            timestamps={JobState.CREATED.value: time.time()},
        )
        with self.lock(job.job_id):
            self._commit(job, "created")
        return job

    def get(self, job_id: str) -> Job:
        job = self._jobs.get(job_id)
        if job is None:
            raise JobNotFoundError(job_id)
        job.validate()
        return job

    def list_jobs(self, state: JobState | str | None = None) -> list[Job]:
        jobs = list(self._jobs.values())
        if state is not None:
            state = JobState(state)
            jobs = [j for j in jobs if j.state is state]
        for j in jobs:
            j.validate()
        jobs.sort(key=lambda j: (j.timestamps.get(JobState.CREATED.value, 0.0), j.job_id))
        return jobs

    def lock(self, job_id: str) -> threading.RLock:
        with self._mutex:
            lock = self._locks.get(job_id)
            if lock is None:
                lock = self._locks[job_id] = threading.RLock()
            return lock

    def update(self, job: Job, event: str) -> Job:
        """Store a new job revision; caller must hold the job's lock."""
        job.validate()
        self._commit(job, event)
        return job

    # ---- persistence ----

    def _commit(self, job: Job, event: str) -> None:
        with self._mutex:
            seq = self._seqs.get(job.job_id, 0) + 1
            self._seqs[job.job_id] = seq
            self._jobs[job.job_id] = job
        if self._root is None:
            return
        record = {"seq": seq, "ts": time.time(), "event": event, "job": job.to_dict()}
        events_path = self._events_path(job.job_id)
        try:
            with open(events_path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StoreError(f"cannot append event for {job.job_id}: {exc}") from exc
        if seq % SNAPSHOT_EVERY == 0:
            self._write_snapshot(job.job_id, seq, job)

    def _write_snapshot(self, job_id: str, seq: int, job: Job) -> None:
        path = self._snapshot_path(job_id)
        tmp = path.with_suffix(".tmp")
        try:
            tmp.write_text(
                json.dumps({"seq": seq, "job": job.to_dict()},
                           ensure_ascii=False, sort_keys=True),
                encoding="utf-8",
            )
            os.replace(tmp, path)
        except OSError as exc:
            raise StoreError(f"cannot write snapshot for {job_id}: {exc}") from exc

    def _events_path(self, job_id: str) -> Path:
        assert self._root is not None
        return self._root / f"{job_id}.events.jsonl"

    def _snapshot_path(self, job_id: str) -> Path:
        assert self._root is not None
        return self._root / f"{job_id}.snapshot.json"

    def _load_all(self) -> None:
        assert self._root is not None
        for events_path in sorted(self._root.glob("*.events.jsonl")):
            job_id = events_path.name[: -len(".events.jsonl")]
            try:
                job, seq = self._replay(job_id)
            except StoreError as exc:
                log.error("skipping unrecoverable job %s: %s", job_id, exc)
                continue
            if job is not None:
                job.validate()
                self._jobs[job_id] = job
                self._seqs[job_id] = seq

    def _replay(self, job_id: str) -> tuple[Job | None, int]:
        snap_seq = 0
        job_dict: dict | None = None
        snap_path = self._snapshot_path(job_id)
        if snap_path.exists():
            try:
                snap = json.loads(snap_path.read_text(encoding="utf-8"))
                snap_seq = int(snap["seq"])
                job_dict = snap["job"]
            except (OSError, ValueError, KeyError) as exc:
                log.warning("ignoring bad snapshot for %s: %s", job_id, exc)
        seq = snap_seq
        try:
            with open(self._events_path(job_id), encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    try:
                        record = json.loads(line)
                    except ValueError:
                        # torn tail from a crash mid-append; drop it
                        log.warning("dropping torn event line for %s", job_id)
                        break
                    if int(record["seq"]) <= snap_seq:
                        continue
                    job_dict = record["job"]
                    seq = int(record["seq"])
        except OSError as exc:
            raise StoreError(f"cannot read events for {job_id}: {exc}") from exc
        if job_dict is None:
            return None, 0
        try:
            return Job.from_dict(job_dict), seq
        except (ValueError, KeyError, TypeError) as exc:
            raise StoreError(f"cannot rebuild job {job_id}: {exc}") from exc


def _bump(job: Job, state: JobState, **changes: Any) -> Job:
    timestamps = {**job.timestamps, state.value: time.time()}
    return replace(
        job, state=state, timestamps=timestamps,
        version=job.version + 1, **changes,
    )


def advance_job(
    store: JobStore,
    engine,
    job_id: str,
    target: JobState | str,
    review_mode: bool | None = None,
    k1: int | None = None,
    k2: int | None = None,
    edited_patch: Mapping[str, Any] | None = None,
) -> Job:
    """Run pipeline stages until the job reaches target (or halts/fails).

    review_mode/k1/k2 override the job's own settings, but only while the
    stage that consumes them is still ahead. With review_mode the job parks
    at AwaitingReview after the conclusion is formed; an edit patch supplied
    here (or via edit_conclusion) is applied before resuming. Stage
    exceptions mark the job Failed and are recorded, not raised.
    """
    target = JobState(target)
    if target not in ADVANCE_TARGETS:
        raise InvalidTransitionError(f"cannot advance to {target.value}")
    with store.lock(job_id):
        job = store.get(job_id)
        if job.state in (JobState.FAILED, JobState.WRITTEN):
            raise InvalidTransitionError(
                f"job {job_id} is {job.state.value} and cannot advance"
            )
        if STAGE_RANK[target] <= STAGE_RANK[job.state]:
            raise InvalidTransitionError(
                f"job {job_id} is already {job.state.value}; "
                f"cannot advance to {target.value}"
            )
        changes: dict[str, Any] = {}
        rank = STAGE_RANK[job.state]
        for name, value, consumed_at in (("k1", k1, 1), ("k2", k2, 1)):
            if value is not None and value != getattr(job, name):
                if rank >= consumed_at:
                    raise InvalidStateError(
                        f"{name} cannot change after search has run"
                    )
                changes[name] = value
        if review_mode is not None and review_mode != job.review_mode:
            if rank >= STAGE_RANK[JobState.AWAITING_REVIEW]:
                raise InvalidStateError(
                    "review_mode cannot change once the job reached review"
                )
            changes["review_mode"] = review_mode
        if changes:
            job = store.update(
                replace(job, version=job.version + 1, **changes), "options"
            )
        if target is JobState.AWAITING_REVIEW and not job.review_mode:
            raise InvalidTransitionError(
                "AwaitingReview is only reachable for review-mode jobs"
            )
        if edited_patch is not None:
            if job.state is not JobState.AWAITING_REVIEW:
                raise InvalidStateError(
                    "an edited conclusion is only accepted at AwaitingReview"
                )
            job = store.update(
                _bump(job, job.state, j_pre=apply_human_edit(job.j_pre, edited_patch)),
                "edited",
            )

        while STAGE_RANK[job.state] < STAGE_RANK[target]:
            if job.state is JobState.CREATED:
                stage, run = "search", lambda: store.update(
                    _bump(job, JobState.SEARCHED,
                          e_ref=engine.search(job.fact, k1=job.k1, k2=job.k2)),
                    "searched",
                )
            elif job.state is JobState.SEARCHED:
                stage, run = "prejudge", lambda: store.update(
                    _bump(job, JobState.PREJUDGED,
                          j_pre=engine.prejudge(job.fact, job.e_ref)),
                    "prejudged",
                )
            elif job.state is JobState.PREJUDGED and job.review_mode:
                stage, run = "review", lambda: store.update(
                    _bump(job, JobState.AWAITING_REVIEW), "awaiting_review"
                )
            else:
                stage, run = "write", lambda: store.update(
                    _bump(job, JobState.WRITTEN,
                          document=engine.write(job.fact, job.j_pre, job.e_ref.c_doc)),
                    "written",
                )
            try:
                job = run()
            except Exception as exc:  # noqa: BLE001 - recorded on the job
                log.warning("job %s failed at %s: %s", job_id, stage, exc)
                return store.update(
                    _bump(job, JobState.FAILED,
                          error={"stage": stage, "message": str(exc)}),
                    "failed",
                )
            if job.state is JobState.AWAITING_REVIEW:
                break  # park for human review regardless of target
        return job


def edit_conclusion(
    store: JobStore,
    job_id: str,
    patch: Mapping[str, Any],
    expected_version: int | None = None,
) -> Job:
    """Apply a human edit to a parked job's conclusion."""
    with store.lock(job_id):
        job = store.get(job_id)
        if job.state is not JobState.AWAITING_REVIEW:
            raise ConflictError(
                f"job {job_id} is {job.state.value}, not AwaitingReview"
            )
        if expected_version is not None and expected_version != job.version:
            raise ConflictError(
                f"job {job_id} is at version {job.version}, "
                f"edit was against {expected_version}"
            )
        new_j_pre = apply_human_edit(job.j_pre, patch)
        return store.update(_bump(job, job.state, j_pre=new_j_pre), "edited")


def evaluate_job(store: JobStore, engine, job_id: str, gold) -> Job:
    """Score a written job's document against a gold document."""
    with store.lock(job_id):
        job = store.get(job_id)
        if job.state is not JobState.WRITTEN:
            raise InvalidStateError(
                f"job {job_id} is {job.state.value}; evaluation needs Written"
            )
        report = engine.evaluate(job.document, gold)
        return store.update(
            replace(job, report=report, version=job.version + 1), "evaluated"
        )
