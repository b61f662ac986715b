"""Job execution: enqueue, worker pool, rerun.

A job merges one file and, when a reference script is attached, scores
the result.  Job ids derive from the input contents and the merge
config, so enqueueing the same work twice is a no-op and a rerun with
an identical config resolves to the original job.  Artifacts are
written per job id and never overwritten, which keeps prior configs'
outputs around for comparison.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from diarfuse.errors import NotFoundError, ParseError, ValidationError
from diarfuse.formats.documents import emit_merged, parse_merged, parse_transcript
from diarfuse.formats.models import ReferenceScript
from diarfuse.formats.normalize import DEFAULT_TABLE, NormalizationTable
from diarfuse.formats.reference import parse_reference
from diarfuse.formats.rttm import parse_rttm
from diarfuse.llm_oracle import (
    AbstainingOracle,
    HttpChatOracle,
    OracleConfig,
    SpeakerOracle,
    StubOracle,
)
from diarfuse.merge import MergeConfig, MergedTranscript, merge
from diarfuse.pipeline import ledger
from diarfuse.pipeline.ledger import Job, JobStore
from diarfuse.pipeline.store import ObjectStore, StoreLocation, read_location
from diarfuse.scoring import FileScore, score_file, score_from_dict, score_to_dict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JobSpec:
    """Everything needed to run one file through merge (and scoring)."""

    source_id: str
    transcript: str
    rttm: str
    reference: str | None = None
    oracle_fixture: str | None = None
    config: MergeConfig = field(default_factory=MergeConfig)
    domain: str = ""


class Runner:
    """Owns the queue: validates and enqueues specs, executes jobs with a
    bounded worker pool, and lays out the artifact directory."""

    def __init__(
        self,
        store: JobStore,
        artifact_dir: str | Path,
        object_store: ObjectStore | None = None,
        parallelism: int = 2,
        llm_endpoint: str = "",
        table: NormalizationTable | None = None,
    ):
        if parallelism < 1:
            raise ValidationError(f"parallelism must be at least 1, got {parallelism}")
        self.store = store
        self.artifact_dir = Path(artifact_dir)
        self.object_store = object_store
        self.parallelism = parallelism
        self.llm_endpoint = llm_endpoint
        self.table = DEFAULT_TABLE if table is None else table
        self._wake = threading.Event()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    # -- queueing -----------------------------------------------------

    def enqueue(self, spec: JobSpec) -> str:
        """Validate a spec, derive its job id, and queue it (idempotent)."""
        digest = hashlib.sha256()
        digest.update(spec.source_id.encode("utf-8") + b"\0")
        digest.update(spec.domain.encode("utf-8") + b"\0")
        for tag, raw in (
            ("transcript", spec.transcript),
            ("rttm", spec.rttm),
            ("reference", spec.reference),
        ):
            digest.update(tag.encode("utf-8") + b"\0")
            if raw is None:
                digest.update(b"-\0")
                continue
            location = StoreLocation.parse(raw)
            try:
                data = read_location(location, self.object_store)
            except NotFoundError:
                raise ValidationError(f"{tag} location not found: {location}") from None
            digest.update(hashlib.sha256(data).hexdigest().encode("ascii") + b"\0")

        # The oracle fixture is resolved lazily at run time; a job whose
        # fixture has gone missing still runs, with every phrase flagged.
        digest.update(b"fixture\0")
        if spec.oracle_fixture is None:
            digest.update(b"-\0")
        else:
            fixture_loc = StoreLocation.parse(spec.oracle_fixture)
            try:
                fixture_data = read_location(fixture_loc, self.object_store)
                digest.update(hashlib.sha256(fixture_data).hexdigest().encode("ascii") + b"\0")
            except NotFoundError:
                digest.update(b"absent\0")

        digest.update(json.dumps(spec.config.to_dict(), sort_keys=True).encode("utf-8"))
        job_id = "j" + digest.hexdigest()[:16]

        job = Job(
            job_id=job_id,
            source_id=spec.source_id,
            transcript=spec.transcript,
            rttm=spec.rttm,
            config=spec.config,
            reference=spec.reference,
            oracle_fixture=spec.oracle_fixture,
            domain=spec.domain,
        )
        if self.store.add(job):
            logger.info("queued job %s for %s", job_id, spec.source_id)
            self._wake.set()
        return job_id

    def rerun(self, job_id: str, config: MergeConfig) -> str:
        """Queue the same inputs under a new config; idempotent when the
        config is unchanged."""
        original = self.store.get(job_id)
        if original.state not in (ledger.DONE, ledger.FAILED):
            raise ValidationError(f"job {job_id} is {original.state}; rerun needs a finished job")
        return self.enqueue(
            JobSpec(
                source_id=original.source_id,
                transcript=original.transcript,
                rttm=original.rttm,
                reference=original.reference,
                oracle_fixture=original.oracle_fixture,
                config=config,
                domain=original.domain,
            )
        )

    # -- execution ----------------------------------------------------

    def run_until_drained(self) -> None:
        """Run queued jobs until none remain, at most `parallelism` at once."""
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            futures = [pool.submit(self._drain_loop) for _ in range(self.parallelism)]
        for future in futures:
            future.result()

    def _drain_loop(self) -> None:
        while True:
            job = self.store.claim_next()
            if job is None:
                return
            self._run_job(job)

    def _run_job(self, job: Job) -> None:
        logger.info("job %s (%s) started", job.job_id, job.source_id)
        try:
            self._execute(job)
        except Exception as exc:
            logger.warning("job %s failed: %s", job.job_id, exc)
            self.store.set_state(job.job_id, ledger.FAILED, error=str(exc))
        else:
            logger.info("job %s done", job.job_id)
            self.store.set_state(job.job_id, ledger.DONE)

    def _execute(self, job: Job) -> None:
        transcript = parse_transcript(
            read_location(StoreLocation.parse(job.transcript), self.object_store)
        )
        diarization = parse_rttm(
            read_location(StoreLocation.parse(job.rttm), self.object_store)
        )
        oracle = self._build_oracle(job)
        merged = merge(transcript, diarization, job.config, oracle)
        self._write_artifact(self.merged_path(job.job_id), emit_merged(merged))

        if job.reference is not None:
            reference = parse_reference(
                read_location(StoreLocation.parse(job.reference), self.object_store),
                domain=job.domain,
            )
            score = score_file(reference, merged, self.table)
            payload = json.dumps(score_to_dict(score), indent=2, sort_keys=True) + "\n"
            self._write_artifact(self.score_path(job.job_id), payload.encode("utf-8"))

    def _build_oracle(self, job: Job) -> SpeakerOracle | None:
        if not job.config.llm_enabled:
            return None
        if job.oracle_fixture is not None:
            try:
                data = read_location(StoreLocation.parse(job.oracle_fixture), self.object_store)
                return StubOracle.from_bytes(data, what=f"oracle fixture {job.oracle_fixture}")
            except (NotFoundError, ParseError, ValidationError) as exc:
                logger.warning(
                    "job %s: oracle fixture unusable (%s); phrases will be flagged",
                    job.job_id,
                    exc,
                )
                return AbstainingOracle()
        config = OracleConfig(endpoint=self.llm_endpoint)
        if not config.resolved_endpoint():
            logger.warning(
                "job %s: llm enabled but no oracle endpoint configured; phrases will be flagged",
                job.job_id,
            )
            return None
        return HttpChatOracle(config)

    # -- artifacts ----------------------------------------------------

    def merged_path(self, job_id: str) -> Path:
        return self.artifact_dir / "jobs" / job_id / "merged.json"

    def score_path(self, job_id: str) -> Path:
        return self.artifact_dir / "jobs" / job_id / "score.json"

    @staticmethod
    def _write_artifact(path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        try:
            tmp.write_bytes(data)
            os.replace(tmp, path)
        finally:
            tmp.unlink(missing_ok=True)

    def load_merged(self, job_id: str) -> MergedTranscript:
        path = self.merged_path(job_id)
        try:
            return parse_merged(path.read_bytes())
        except FileNotFoundError:
            raise NotFoundError(f"no merged artifact for job {job_id}") from None

    def load_reference(self, job: Job) -> ReferenceScript:
        if job.reference is None:
            raise NotFoundError(f"job {job.job_id} has no reference script")
        return parse_reference(
            read_location(StoreLocation.parse(job.reference), self.object_store),
            domain=job.domain,
        )

    def load_score(self, job_id: str) -> FileScore | None:
        path = self.score_path(job_id)
        if not path.exists():
            return None
        return score_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def collect_scores(self) -> list[FileScore]:
        """Scores of all DONE jobs, ordered by (source_id, job_id)."""
        scores = []
        for job in sorted(self.store.jobs(), key=lambda j: (j.source_id, j.job_id)):
            if job.state != ledger.DONE:
                continue
            score = self.load_score(job.job_id)
            if score is not None:
                scores.append(score)
        return scores

    # -- background watcher (service mode) ----------------------------

    def start(self) -> None:
        """Run jobs in the background as they arrive, until stop()."""
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._watch_loop, daemon=True)
        self._thread.start()

    def _watch_loop(self) -> None:
        while not self._stop.is_set():
            self.run_until_drained()
            self._wake.wait(timeout=0.1)
            self._wake.clear()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._wake.set()
        self._thread.join()
        self._thread = None
