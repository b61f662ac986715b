"""Canonical data models and every external file format.

Submodules:
    models     -- transcript, diarization, and reference value types
    normalize  -- word normalization and tokenization
    rttm       -- RTTM diarization files
    reference  -- plain-text reference scripts
    documents  -- JSON transcript and merged-transcript documents
"""

from diarfuse.formats.models import (
    Diarization,
    Phrase,
    ReferenceScript,
    SpeakerTurn,
    Transcript,
    WordToken,
)
from diarfuse.formats.normalize import (
    DEFAULT_TABLE,
    NormalizationTable,
    emit_table,
    normalize_word,
    parse_table,
    tokenize,
)
from diarfuse.formats.rttm import emit_rttm, parse_rttm
from diarfuse.formats.reference import emit_reference, parse_reference
from diarfuse.formats.documents import (
    emit_merged,
    emit_transcript,
    parse_merged,
    parse_transcript,
)

__all__ = [
    "WordToken",
    "Phrase",
    "Transcript",
    "SpeakerTurn",
    "Diarization",
    "ReferenceScript",
    "NormalizationTable",
    "DEFAULT_TABLE",
    "normalize_word",
    "tokenize",
    "parse_table",
    "emit_table",
    "parse_rttm",
    "emit_rttm",
    "parse_reference",
    "emit_reference",
    "parse_transcript",
    "emit_transcript",
    "parse_merged",
    "emit_merged",
]
