"""Plain-text reference scripts: one `SpeakerLabel: utterance` per line."""

from __future__ import annotations

from diarfuse.errors import ParseError, ValidationError
from diarfuse.formats.models import ReferenceScript


def parse_reference(data: bytes, domain: str = "") -> ReferenceScript:
    """Parse a reference script.

    The file format carries no domain; callers supply it (job specs and
    the CLI take it from the batch manifest or a flag).
    """
    entries = []
    for lineno, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        label, sep, utterance = line.partition(":")
        if not sep:
            raise ParseError(
                f"reference line {lineno}: expected 'SpeakerLabel: utterance'", line=lineno
            )
        label = label.strip()
        utterance = utterance.strip()
        if not label or not utterance:
            raise ParseError(
                f"reference line {lineno}: empty speaker label or utterance", line=lineno
            )
        entries.append((label, utterance))
    try:
        return ReferenceScript(tuple(entries), domain=domain)
    except ValidationError as exc:
        raise ParseError(str(exc)) from exc


def emit_reference(script: ReferenceScript) -> bytes:
    lines = [f"{label}: {utterance}" for label, utterance in script.entries]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
