"""HTTP API for the review workflow.

The service is a thin layer over the job ledger and artifact store:
list files, fetch merged documents, record human edits, trigger reruns,
and report scores.  Model outputs are immutable; every human change is
an append-only edit record applied as an overlay at read time, keyed by
(source_id, phrase_id) so it survives reruns that keep phrase ids.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
import time
from pathlib import Path
from typing import Any

from fastapi import APIRouter, Depends, FastAPI, Header, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from diarfuse.errors import NotFoundError, ValidationError
from diarfuse.formats.documents import merged_to_dict
from diarfuse.merge import MergeConfig, MergedTranscript
from diarfuse.pipeline import ledger
from diarfuse.pipeline.ledger import Job
from diarfuse.pipeline.runner import Runner
from diarfuse.scoring import score_file, score_to_dict

TOKEN_ENV_VAR = "DIARFUSE_API_TOKEN"
UI_DIR_ENV_VAR = "DIARFUSE_UI_DIR"

EDITABLE_FIELDS = ("assigned_speaker", "text")


class EditStore:
    """Append-only JSONL log of human corrections.

    Two event kinds: "edit" adds a correction, "revert" cancels one by
    id.  The effective overlay for a file is the surviving edits in
    application order.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[dict] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        self._records.append(json.loads(line))

    def _append(self, record: dict) -> None:
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
        self._records.append(record)

    def add(
        self,
        source_id: str,
        phrase_id: int,
        field: str,
        old_value: Any,
        new_value: str,
        editor: str = "",
    ) -> dict:
        with self._lock:
            record = {
                "event": "edit",
                "edit_id": f"e{len(self._records) + 1}",
                "source_id": source_id,
                "phrase_id": phrase_id,
                "field": field,
                "old_value": old_value,
                "new_value": new_value,
                "editor": editor,
                "at": time.time(),
            }
            self._append(record)
            return record

    def revert(self, source_id: str, edit_id: str) -> dict:
        with self._lock:
            reverted = {r["edit_id"] for r in self._records if r["event"] == "revert"}
            for record in self._records:
                if (
                    record["event"] == "edit"
                    and record["edit_id"] == edit_id
                    and record["source_id"] == source_id
                ):
                    if edit_id in reverted:
                        raise NotFoundError(f"edit {edit_id} is already reverted")
                    marker = {
                        "event": "revert",
                        "edit_id": edit_id,
                        "source_id": source_id,
                        "at": time.time(),
                    }
                    self._append(marker)
                    return record
            raise NotFoundError(f"no edit {edit_id} for {source_id}")

    def active_for(self, source_id: str) -> list[dict]:
        """Surviving edits for one file, oldest first."""
        with self._lock:
            reverted = {r["edit_id"] for r in self._records if r["event"] == "revert"}
            return [
                r
                for r in self._records
                if r["event"] == "edit"
                and r["source_id"] == source_id
                and r["edit_id"] not in reverted
            ]


def apply_overlay(merged: MergedTranscript, edits: list[dict]) -> MergedTranscript:
    """Apply surviving edits to a merged transcript.

    Later edits win per (phrase, field).  An edited phrase is considered
    human-verified, so its flag is cleared.  Edits whose phrase id no
    longer exists (a rerun changed segmentation) are skipped.
    """
    by_phrase: dict[int, dict[str, str]] = {}
    for record in edits:
        by_phrase.setdefault(int(record["phrase_id"]), {})[record["field"]] = str(
            record["new_value"]
        )
    if not by_phrase:
        return merged

    labeled = []
    for lp in merged.labeled:
        fields = by_phrase.get(lp.phrase.id)
        if not fields:
            labeled.append(lp)
            continue
        phrase = lp.phrase
        if "text" in fields:
            phrase = dataclasses.replace(phrase, text=fields["text"])
        labeled.append(
            dataclasses.replace(
                lp,
                phrase=phrase,
                assigned_speaker=fields.get("assigned_speaker", lp.assigned_speaker),
                flagged=False,
            )
        )
    return MergedTranscript(tuple(labeled), config=merged.config, source_id=merged.source_id)


class RerunRequest(BaseModel):
    weight: float | None = None
    roles: dict[str, str] | None = None
    flag_threshold: float | None = None


class EditRequest(BaseModel):
    phrase_id: int
    field: str
    new_value: str
    editor: str = ""


def create_app(runner: Runner) -> FastAPI:
    """Build the review API over one runner (ledger + artifacts)."""
    store = runner.store
    edit_store = EditStore(runner.artifact_dir / "edits.jsonl")
    # Edit/rerun posts are serialized per file; reads stay concurrent.
    source_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def lock_for(source_id: str) -> threading.Lock:
        with locks_guard:
            return source_locks.setdefault(source_id, threading.Lock())

    def require_token(authorization: str = Header(default="")) -> None:
        token = os.environ.get(TOKEN_ENV_VAR, "")
        if not token:
            return
        if authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    def resolve(file_id: str) -> Job:
        """A file id is a source_id (newest job wins) or a literal job id."""
        jobs = store.jobs()
        for job in jobs:
            if job.job_id == file_id:
                return job
        candidates = [j for j in jobs if j.source_id == file_id]
        if not candidates:
            raise HTTPException(status_code=404, detail=f"unknown file {file_id!r}")
        return max(candidates, key=lambda j: (j.created_at, j.job_id))

    def effective_merged(job: Job) -> MergedTranscript:
        merged = runner.load_merged(job.job_id)
        return apply_overlay(merged, edit_store.active_for(job.source_id))

    def require_done(job: Job) -> None:
        if job.state != ledger.DONE:
            raise HTTPException(
                status_code=409, detail=f"job {job.job_id} is {job.state}, not DONE"
            )

    router = APIRouter(dependencies=[Depends(require_token)])

    @router.get("/files")
    def list_files() -> list[dict]:
        newest: dict[str, Job] = {}
        for job in store.jobs():
            current = newest.get(job.source_id)
            if current is None or (job.created_at, job.job_id) > (current.created_at, current.job_id):
                newest[job.source_id] = job
        out = []
        for source_id in sorted(newest):
            job = newest[source_id]
            entry: dict[str, Any] = {
                "source_id": source_id,
                "job_id": job.job_id,
                "state": job.state,
                "domain": job.domain,
                "wer": None,
                "mislabel_rate": None,
                "flagged_count": None,
            }
            if job.state == ledger.DONE:
                try:
                    entry["flagged_count"] = effective_merged(job).flagged_count
                except NotFoundError:
                    pass
                score = runner.load_score(job.job_id)
                if score is not None:
                    entry["wer"] = score.wer
                    entry["mislabel_rate"] = score.mislabel_rate
            if job.state == ledger.FAILED:
                entry["error"] = job.error
            out.append(entry)
        return out

    @router.get("/files/{file_id}/merged")
    def get_merged(file_id: str) -> dict:
        job = resolve(file_id)
        require_done(job)
        try:
            merged = effective_merged(job)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        doc = merged_to_dict(merged)
        doc["job_id"] = job.job_id
        doc["state"] = job.state
        doc["flagged_count"] = merged.flagged_count
        doc["edits"] = edit_store.active_for(job.source_id)
        return doc

    @router.post("/files/{file_id}/rerun")
    def rerun(file_id: str, request: RerunRequest, response: Response) -> dict:
        job = resolve(file_id)
        base = job.config
        weight = base.llm_weight if request.weight is None else request.weight
        if not 0.0 <= weight <= 1.0:
            raise HTTPException(
                status_code=422, detail=f"weight {weight} outside [0, 1]"
            )
        threshold = (
            base.flag_threshold
            if request.flag_threshold is None
            else request.flag_threshold
        )
        try:
            config = MergeConfig(
                llm_weight=weight,
                roles=base.roles if request.roles is None else request.roles,
                flag_threshold=threshold,
                llm_enabled=base.llm_enabled,
            )
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None

        with lock_for(job.source_id):
            known = {j.job_id for j in store.jobs()}
            try:
                new_id = runner.rerun(job.job_id, config)
            except ValidationError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
        existing = new_id in known
        # 200 when the config resolves to a job we already have, 202 when
        # new work was queued.
        response.status_code = 200 if existing else 202
        return {"job_id": new_id, "existing": existing}

    @router.post("/files/{file_id}/edits")
    def post_edit(file_id: str, request: EditRequest) -> dict:
        if request.field not in EDITABLE_FIELDS:
            raise HTTPException(
                status_code=422,
                detail=f"field must be one of {', '.join(EDITABLE_FIELDS)}",
            )
        job = resolve(file_id)
        require_done(job)
        with lock_for(job.source_id):
            merged = effective_merged(job)
            target = None
            for lp in merged.labeled:
                if lp.phrase.id == request.phrase_id:
                    target = lp
                    break
            if target is None:
                raise HTTPException(
                    status_code=404, detail=f"no phrase {request.phrase_id} in {job.source_id}"
                )
            old_value = (
                target.assigned_speaker
                if request.field == "assigned_speaker"
                else target.phrase.text
            )
            record = edit_store.add(
                source_id=job.source_id,
                phrase_id=request.phrase_id,
                field=request.field,
                old_value=old_value,
                new_value=request.new_value,
                editor=request.editor,
            )
        return record

    @router.delete("/files/{file_id}/edits/{edit_id}")
    def delete_edit(file_id: str, edit_id: str) -> dict:
        job = resolve(file_id)
        with lock_for(job.source_id):
            try:
                record = edit_store.revert(job.source_id, edit_id)
            except NotFoundError as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from None
        return {"reverted": record["edit_id"]}

    @router.get("/files/{file_id}/score")
    def get_score(file_id: str) -> dict:
        job = resolve(file_id)
        require_done(job)
        if job.reference is None:
            raise HTTPException(
                status_code=404, detail=f"{job.source_id} has no reference script"
            )
        try:
            merged = effective_merged(job)
            reference = runner.load_reference(job)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        try:
            score = score_file(reference, merged, runner.table)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return score_to_dict(score)

    app = FastAPI(title="diarfuse review api")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.include_router(router)

    ui_dir = os.environ.get(UI_DIR_ENV_VAR, "")
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
