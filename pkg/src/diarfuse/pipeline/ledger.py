"""Append-only on-disk job ledger.

Every job event (enqueue, state change) is one JSON line.  The full
job table is rebuilt by replaying the file, so the ledger is also the
queue's persistence: nothing else holds authoritative state.  All
mutations go through one lock, which serializes state transitions.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from diarfuse.errors import NotFoundError, ParseError, ValidationError
from diarfuse.merge import MergeConfig

QUEUED = "QUEUED"
RUNNING = "RUNNING"
DONE = "DONE"
FAILED = "FAILED"

_TRANSITIONS = {
    QUEUED: {RUNNING},
    RUNNING: {DONE, FAILED},
    DONE: set(),
    FAILED: set(),
}


@dataclass
class Job:
    """One unit of batch work: merge a file, optionally score it."""

    job_id: str
    source_id: str
    transcript: str
    rttm: str
    config: MergeConfig
    reference: str | None = None
    oracle_fixture: str | None = None
    domain: str = ""
    state: str = QUEUED
    created_at: float = 0.0
    started_at: float | None = None
    finished_at: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "source_id": self.source_id,
            "transcript": self.transcript,
            "rttm": self.rttm,
            "reference": self.reference,
            "oracle_fixture": self.oracle_fixture,
            "domain": self.domain,
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict, created_at: float) -> "Job":
        return cls(
            job_id=str(data["job_id"]),
            source_id=str(data["source_id"]),
            transcript=str(data["transcript"]),
            rttm=str(data["rttm"]),
            config=MergeConfig.from_dict(data.get("config", {})),
            reference=data.get("reference"),
            oracle_fixture=data.get("oracle_fixture"),
            domain=str(data.get("domain", "")),
            created_at=created_at,
        )


class JobStore:
    """Thread-safe job table backed by a JSONL event log."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._jobs: dict[str, Job] = {}
        if self.path.exists():
            self._replay()

    def _replay(self) -> None:
        with self.path.open("r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(
                        f"ledger {self.path} line {line_no}: {exc.msg}", line=line_no
                    ) from exc
                self._apply(event, line_no)

    def _apply(self, event: dict, line_no: int) -> None:
        kind = event.get("event")
        if kind == "enqueue":
            job = Job.from_dict(event["job"], created_at=float(event.get("at", 0.0)))
            self._jobs[job.job_id] = job
        elif kind == "state":
            job = self._jobs.get(str(event.get("job_id")))
            if job is None:
                raise ParseError(
                    f"ledger {self.path} line {line_no}: state event for unknown job",
                    line=line_no,
                )
            job.state = str(event["state"])
            at = float(event.get("at", 0.0))
            if job.state == RUNNING:
                job.started_at = at
            else:
                job.finished_at = at
            job.error = event.get("error")
        else:
            raise ParseError(
                f"ledger {self.path} line {line_no}: unknown event {kind!r}", line=line_no
            )

    def _append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True) + "\n"
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(line)
            handle.flush()

    def add(self, job: Job) -> bool:
        """Record a new job; False if the id is already present."""
        with self._lock:
            if job.job_id in self._jobs:
                return False
            job.created_at = time.time()
            self._jobs[job.job_id] = job
            self._append({"event": "enqueue", "job": job.to_dict(), "at": job.created_at})
            return True

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"unknown job {job_id!r}")
            return job

    def jobs(self) -> list[Job]:
        with self._lock:
            return list(self._jobs.values())

    def counts(self) -> dict[str, int]:
        with self._lock:
            out = {QUEUED: 0, RUNNING: 0, DONE: 0, FAILED: 0}
            for job in self._jobs.values():
                out[job.state] += 1
            return out

    def set_state(self, job_id: str, state: str, error: str | None = None) -> None:
        with self._lock:
            self._set_state_locked(job_id, state, error)

    def _set_state_locked(self, job_id: str, state: str, error: str | None) -> None:
        job = self._jobs.get(job_id)
        if job is None:
            raise NotFoundError(f"unknown job {job_id!r}")
        if state not in _TRANSITIONS:
            raise ValidationError(f"unknown job state {state!r}")
        if state not in _TRANSITIONS[job.state]:
            raise ValidationError(f"illegal transition {job.state} -> {state} for {job_id}")
        at = time.time()
        job.state = state
        job.error = error
        if state == RUNNING:
            job.started_at = at
        else:
            job.finished_at = at
        event = {"event": "state", "job_id": job_id, "state": state, "at": at}
        if error is not None:
            event["error"] = error
        self._append(event)

    def claim_next(self) -> Job | None:
        """Atomically move the oldest QUEUED job to RUNNING and return it."""
        with self._lock:
            for job in self._jobs.values():
                if job.state == QUEUED:
                    self._set_state_locked(job.job_id, RUNNING, None)
                    return job
            return None
