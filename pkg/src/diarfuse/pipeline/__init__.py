"""Batch orchestration: job ledger, object store access, worker pool."""

from diarfuse.pipeline.config import PipelineConfig, parse_config_file
from diarfuse.pipeline.ledger import Job, JobStore
from diarfuse.pipeline.runner import JobSpec, Runner
from diarfuse.pipeline.store import ObjectStore, S3Credentials, StoreLocation

__all__ = [
    "Job",
    "JobSpec",
    "JobStore",
    "ObjectStore",
    "PipelineConfig",
    "Runner",
    "S3Credentials",
    "StoreLocation",
    "parse_config_file",
]
