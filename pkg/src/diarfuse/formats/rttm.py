"""RTTM diarization files.

One SPEAKER record per line, ten whitespace-separated fields:

    SPEAKER <file> <chan> <onset> <duration> <NA> <NA> <speaker> <NA> <NA>

Onset and duration are decimal seconds.  Arithmetic on them is done in
decimal so that emit followed by parse reproduces the original turn
boundaries exactly (binary-float addition of onset + duration would
drift on values like 0.7 + 0.2).
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation

from diarfuse.errors import ParseError
from diarfuse.formats.models import Diarization, SpeakerTurn


def parse_rttm(data: bytes, num_speakers: int | None = None) -> Diarization:
    """Parse RTTM bytes into a Diarization.

    Non-SPEAKER lines (comments, other record types) are skipped.  A
    malformed SPEAKER line raises ParseError carrying its line number.
    """
    turns = []
    for lineno, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] != "SPEAKER":
            continue
        if len(fields) < 8:
            raise ParseError(
                f"RTTM line {lineno}: SPEAKER record has {len(fields)} fields, expected 10",
                line=lineno,
            )
        try:
            onset = Decimal(fields[3])
            duration = Decimal(fields[4])
        except InvalidOperation as exc:
            raise ParseError(
                f"RTTM line {lineno}: non-numeric onset/duration {fields[3]!r} {fields[4]!r}",
                line=lineno,
            ) from exc
        if onset < 0:
            raise ParseError(f"RTTM line {lineno}: negative onset {fields[3]}", line=lineno)
        if duration <= 0:
            raise ParseError(
                f"RTTM line {lineno}: non-positive duration {fields[4]}", line=lineno
            )
        speaker = fields[7]
        turns.append(SpeakerTurn(speaker, float(onset), float(onset + duration)))
    return Diarization(tuple(turns), num_speakers=num_speakers)


def emit_rttm(diarization: Diarization, file_id: str = "recording") -> bytes:
    """Emit SPEAKER records; round-trips through parse_rttm exactly."""
    lines = []
    for turn in diarization.turns:
        onset = Decimal(repr(turn.start))
        duration = Decimal(repr(turn.end)) - onset
        lines.append(
            f"SPEAKER {file_id} 1 {onset} {duration} <NA> <NA> {turn.speaker_id} <NA> <NA>"
        )
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
