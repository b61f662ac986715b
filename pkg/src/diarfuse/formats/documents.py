"""JSON documents: canonical transcripts and merged transcripts.

Serialization is deterministic (sorted keys, two-space indent) so that
identical values always produce identical bytes, and floats are written
with full round-trip precision so parse(emit(x)) equals x structurally.
"""

from __future__ import annotations

import json
from typing import TYPE_CHECKING, Any

from diarfuse.errors import ParseError, ValidationError
from diarfuse.formats.models import Phrase, Transcript, WordToken

if TYPE_CHECKING:
    from diarfuse.merge import MergedTranscript


def _loads(data: bytes, what: str) -> Any:
    try:
        return json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{what}: not valid UTF-8 at byte {exc.start}", offset=exc.start) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: invalid JSON at offset {exc.pos}: {exc.msg}", offset=exc.pos) from exc


def _dumps(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def _require(mapping: Any, key: str, what: str) -> Any:
    if not isinstance(mapping, dict) or key not in mapping:
        raise ParseError(f"{what}: missing required field {key!r}")
    return mapping[key]


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{what}: expected a number, got {value!r}")
    return float(value)


def _parse_word(data: Any, phrase_id: int) -> WordToken:
    what = f"phrase {phrase_id} word"
    return WordToken(
        text=str(_require(data, "text", what)),
        start=_number(_require(data, "start", what), what),
        end=_number(_require(data, "end", what), what),
        confidence=_number(_require(data, "confidence", what), what),
    )


def _parse_phrase(data: Any) -> Phrase:
    raw_id = _require(data, "id", "phrase")
    if isinstance(raw_id, bool) or not isinstance(raw_id, int):
        raise ParseError(f"phrase: id must be an integer, got {raw_id!r}")
    phrase_id = raw_id
    words = tuple(_parse_word(w, phrase_id) for w in data.get("words", []))
    what = f"phrase {phrase_id}"
    return Phrase(
        id=phrase_id,
        start=_number(_require(data, "start", what), what),
        end=_number(_require(data, "end", what), what),
        text=str(_require(data, "text", what)),
        words=words,
    )


def _word_to_dict(word: WordToken) -> dict:
    return {"text": word.text, "start": word.start, "end": word.end, "confidence": word.confidence}


def _phrase_to_dict(phrase: Phrase) -> dict:
    return {
        "id": phrase.id,
        "start": phrase.start,
        "end": phrase.end,
        "text": phrase.text,
        "words": [_word_to_dict(w) for w in phrase.words],
    }


def parse_transcript(data: bytes) -> Transcript:
    """Parse a canonical transcript document.

    Raises ParseError (with a character offset) for undecodable or
    malformed documents and ValidationError (naming the phrase) when a
    structurally valid document breaks a transcript invariant.
    """
    doc = _loads(data, "transcript")
    phrases_raw = _require(doc, "phrases", "transcript")
    if not isinstance(phrases_raw, list):
        raise ParseError("transcript: 'phrases' must be a list")
    phrases = tuple(_parse_phrase(p) for p in phrases_raw)
    duration = doc.get("duration")
    return Transcript(
        phrases=phrases,
        source_id=str(_require(doc, "source_id", "transcript")),
        duration=_number(duration, "transcript duration") if duration is not None else None,
    )


def emit_transcript(transcript: Transcript) -> bytes:
    doc: dict[str, Any] = {
        "source_id": transcript.source_id,
        "phrases": [_phrase_to_dict(p) for p in transcript.phrases],
    }
    if transcript.duration is not None:
        doc["duration"] = transcript.duration
    return _dumps(doc)


def parse_merged(data: bytes) -> MergedTranscript:
    """Parse a merged-transcript document.

    Probability maps are re-validated on load.  The argmax/confidence
    linkage is *not* re-imposed here: merge output satisfies it, but a
    document carrying human label corrections legitimately does not.
    """
    # Imported here: merge depends on the models in this package, so a
    # module-level import would be circular.
    from diarfuse.merge import LabeledPhrase, MergeConfig, MergedTranscript, SpeakerDistribution

    doc = _loads(data, "merged transcript")
    config = MergeConfig.from_dict(_require(doc, "config", "merged transcript"))
    labeled = []
    for item in _require(doc, "phrases", "merged transcript"):
        phrase = _parse_phrase(item)
        what = f"merged phrase {phrase.id}"
        assigned = item.get("assigned_speaker")
        distribution = SpeakerDistribution(
            {str(k): _number(v, what) for k, v in item.get("distribution", {}).items()}
        )
        labeled.append(
            LabeledPhrase(
                phrase=phrase,
                assigned_speaker=str(assigned) if assigned is not None else None,
                distribution=distribution,
                overlap_ratios={
                    str(k): _number(v, what) for k, v in item.get("overlap_ratios", {}).items()
                },
                llm_choice=str(item["llm_choice"]) if item.get("llm_choice") is not None else None,
                confidence=_number(item.get("confidence", 0.0), what),
                flagged=bool(item.get("flagged", False)),
            )
        )
    return MergedTranscript(
        labeled=tuple(labeled),
        config=config,
        source_id=str(_require(doc, "source_id", "merged transcript")),
    )


def merged_to_dict(merged: MergedTranscript) -> dict:
    """Plain-dict form of a merged transcript (also the wire format)."""
    phrases = []
    for lp in merged.labeled:
        entry = _phrase_to_dict(lp.phrase)
        entry.update(
            {
                "assigned_speaker": lp.assigned_speaker,
                "distribution": dict(sorted(lp.distribution.items())),
                "overlap_ratios": dict(sorted(lp.overlap_ratios.items())),
                "llm_choice": lp.llm_choice,
                "confidence": lp.confidence,
                "flagged": lp.flagged,
            }
        )
        phrases.append(entry)
    return {
        "source_id": merged.source_id,
        "config": merged.config.to_dict(),
        "phrases": phrases,
    }


def emit_merged(merged: MergedTranscript) -> bytes:
    """Emit a merged transcript; parse_merged(emit_merged(m)) equals m."""
    return _dumps(merged_to_dict(merged))
