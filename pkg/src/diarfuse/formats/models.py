"""Value types for transcripts, diarization, and reference scripts.

All types are frozen dataclasses: immutable after construction and safe
to share across threads.  Invariants are checked at construction time,
so a value that exists is a valid value.
"""

from __future__ import annotations

from dataclasses import dataclass

from diarfuse.errors import ValidationError

# Upstream models jitter word timestamps slightly outside the enclosing
# phrase window; this is the tolerated overhang in seconds.
WORD_TIME_TOLERANCE = 0.5


@dataclass(frozen=True)
class WordToken:
    """A single transcribed word with timing and ASR confidence."""

    text: str
    start: float
    end: float
    confidence: float

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("word text is empty")
        if self.start < 0:
            raise ValidationError(f"word {self.text!r} has negative start {self.start}")
        if self.end < self.start:
            raise ValidationError(
                f"word {self.text!r} ends at {self.end} before it starts at {self.start}"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(
                f"word {self.text!r} confidence {self.confidence} outside [0, 1]"
            )


@dataclass(frozen=True)
class Phrase:
    """An ASR-emitted utterance segment with its word tokens."""

    id: int
    start: float
    end: float
    text: str
    words: tuple[WordToken, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if self.end < self.start:
            raise ValidationError(
                f"phrase {self.id} ends at {self.end} before it starts at {self.start}",
                phrase_id=self.id,
            )
        lo = self.start - WORD_TIME_TOLERANCE
        hi = self.end + WORD_TIME_TOLERANCE
        prev_start = None
        for word in self.words:
            if word.start < lo or word.end > hi:
                raise ValidationError(
                    f"phrase {self.id}: word {word.text!r} [{word.start}, {word.end}] "
                    f"lies outside the phrase window [{self.start}, {self.end}]",
                    phrase_id=self.id,
                )
            if prev_start is not None and word.start < prev_start:
                raise ValidationError(
                    f"phrase {self.id}: word starts go backwards at {word.text!r}",
                    phrase_id=self.id,
                )
            prev_start = word.start

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Transcript:
    """Ordered phrases for one recording; the source of record for text."""

    phrases: tuple[Phrase, ...]
    source_id: str
    duration: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "phrases", tuple(self.phrases))
        prev_start = None
        for index, phrase in enumerate(self.phrases):
            if phrase.id != index:
                raise ValidationError(
                    f"phrase ids must be consecutive from 0; found id {phrase.id} at "
                    f"position {index}",
                    phrase_id=phrase.id,
                )
            if prev_start is not None and phrase.start < prev_start:
                raise ValidationError(
                    f"phrase {phrase.id} starts at {phrase.start}, before the previous phrase",
                    phrase_id=phrase.id,
                )
            prev_start = phrase.start


@dataclass(frozen=True)
class SpeakerTurn:
    """A contiguous interval attributed to one speaker."""

    speaker_id: str
    start: float
    end: float

    def __post_init__(self):
        if not self.end > self.start:
            raise ValidationError(
                f"turn for {self.speaker_id!r} must have positive duration, got "
                f"[{self.start}, {self.end}]"
            )


@dataclass(frozen=True)
class Diarization:
    """A set of speaker turns, optionally with a known speaker count."""

    turns: tuple[SpeakerTurn, ...]
    num_speakers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if self.num_speakers is not None:
            if self.num_speakers <= 0:
                raise ValidationError(f"num_speakers must be positive, got {self.num_speakers}")
            distinct = {turn.speaker_id for turn in self.turns}
            if len(distinct) > self.num_speakers:
                raise ValidationError(
                    f"{len(distinct)} distinct speakers exceed declared num_speakers "
                    f"{self.num_speakers}"
                )

    def speaker_ids(self) -> list[str]:
        """Distinct speaker ids in first-appearance order."""
        seen: dict[str, None] = {}
        for turn in self.turns:
            seen.setdefault(turn.speaker_id)
        return list(seen)


@dataclass(frozen=True)
class ReferenceScript:
    """Speaker-labeled reference utterances for one recording."""

    entries: tuple[tuple[str, str], ...]
    domain: str = ""

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))
        for index, (label, utterance) in enumerate(self.entries):
            if not label.strip():
                raise ValidationError(f"reference entry {index} has an empty speaker label")
            if not utterance.strip():
                raise ValidationError(f"reference entry {index} has an empty utterance")
