"""Fuse a transcript with diarization into a speaker-labeled transcript.

The transcript is the source of record; each phrase gets a probability
distribution over speakers derived from how much of the phrase's time
span each speaker's turns cover.  An optional per-phrase LLM guess is
blended in as a convex combination controlled by the configured weight.
Phrases whose evidence is weak are flagged for human review.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Mapping

from diarfuse.errors import ValidationError
from diarfuse.formats.models import Diarization, Phrase, Transcript

if TYPE_CHECKING:
    from diarfuse.llm_oracle import SpeakerOracle

logger = logging.getLogger(__name__)

# Display label used for phrases with no assignable speaker.
UNKNOWN_LABEL = "UNKNOWN"

# Sum tolerance for a well-formed probability distribution.
_SUM_TOLERANCE = 1e-9

# Below this assignment confidence a two-speaker decision is a near
# coin flip, so the phrase is surfaced for verification.
DEFAULT_FLAG_THRESHOLD = 0.6

# Standardized blend weight; sensible per-file range is 0.0 (ideal
# diarization) to 0.6 (very poor diarization).
DEFAULT_LLM_WEIGHT = 0.45


@dataclass(frozen=True)
class SpeakerDistribution:
    """Probability map over speaker ids; empty means "no evidence"."""

    entries: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(self.entries))
        total = 0.0
        for speaker, prob in self.entries.items():
            if not 0.0 <= prob <= 1.0:
                raise ValidationError(f"probability for {speaker!r} is {prob}, outside [0, 1]")
            total += prob
        if self.entries and abs(total - 1.0) > _SUM_TOLERANCE:
            raise ValidationError(f"probabilities sum to {total}, not 1")

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __getitem__(self, speaker: str) -> float:
        return self.entries[speaker]

    def get(self, speaker: str, default: float = 0.0) -> float:
        return self.entries.get(speaker, default)

    def items(self):
        return self.entries.items()


EMPTY_DISTRIBUTION = SpeakerDistribution({})


@dataclass(frozen=True)
class MergeConfig:
    """User-adjustable knobs for one merge pass."""

    llm_weight: float = DEFAULT_LLM_WEIGHT
    roles: dict[str, str] = field(default_factory=dict)
    flag_threshold: float = DEFAULT_FLAG_THRESHOLD
    llm_enabled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "roles", dict(self.roles))
        if not 0.0 <= self.llm_weight <= 1.0:
            raise ValidationError(f"llm_weight {self.llm_weight} outside [0, 1]")
        if not 0.0 <= self.flag_threshold <= 1.0:
            raise ValidationError(f"flag_threshold {self.flag_threshold} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "llm_weight": self.llm_weight,
            "roles": dict(sorted(self.roles.items())),
            "flag_threshold": self.flag_threshold,
            "llm_enabled": self.llm_enabled,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MergeConfig":
        return cls(
            llm_weight=float(data.get("llm_weight", DEFAULT_LLM_WEIGHT)),
            roles=dict(data.get("roles", {})),
            flag_threshold=float(data.get("flag_threshold", DEFAULT_FLAG_THRESHOLD)),
            llm_enabled=bool(data.get("llm_enabled", False)),
        )


@dataclass(frozen=True)
class LabeledPhrase:
    """A phrase with its assigned speaker and the evidence behind it.

    ``assigned_speaker`` is None (UNKNOWN) when the distribution is
    empty.  ``flagged`` is true when the phrase needs human review:
    confidence below threshold, no diarization overlap backing the
    assignment, or the LLM was expected but gave no usable answer.
    """

    phrase: Phrase
    assigned_speaker: str | None
    distribution: SpeakerDistribution
    overlap_ratios: dict[str, float] = field(default_factory=dict)
    llm_choice: str | None = None
    confidence: float = 0.0
    flagged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "overlap_ratios", dict(self.overlap_ratios))


@dataclass(frozen=True)
class MergedTranscript:
    """Labeled phrases in source order plus the config that produced them."""

    labeled: tuple[LabeledPhrase, ...]
    config: MergeConfig
    source_id: str

    def __post_init__(self):
        object.__setattr__(self, "labeled", tuple(self.labeled))

    @property
    def flagged_count(self) -> int:
        return sum(1 for lp in self.labeled if lp.flagged)


def coverage_ratios(phrase: Phrase, diarization: Diarization) -> dict[str, float]:
    """Fraction of the phrase's time span covered by each speaker's turns.

    Overlapping turns of the same speaker are unioned first, so
    duplicated turns never push coverage past 1.  Speakers with zero
    overlap are omitted.  A zero-duration phrase gets coverage 1 from
    any speaker whose turn contains the instant.
    """
    duration = phrase.end - phrase.start
    if duration == 0:
        instant = phrase.start
        return {
            turn.speaker_id: 1.0
            for turn in diarization.turns
            if turn.start <= instant <= turn.end
        }

    clipped: dict[str, list[tuple[float, float]]] = {}
    for turn in diarization.turns:
        lo = max(turn.start, phrase.start)
        hi = min(turn.end, phrase.end)
        if hi > lo:
            clipped.setdefault(turn.speaker_id, []).append((lo, hi))

    ratios = {}
    for speaker, intervals in clipped.items():
        # Clamp: summing merged-interval lengths can overshoot the full
        # span by an ulp, and a coverage ratio above 1 is meaningless.
        ratios[speaker] = min(1.0, _union_length(intervals) / duration)
    return ratios


def _union_length(intervals: list[tuple[float, float]]) -> float:
    """Total length of the union of closed intervals."""
    total = 0.0
    current_lo, current_hi = None, None
    for lo, hi in sorted(intervals):
        if current_hi is None or lo > current_hi:
            if current_hi is not None:
                total += current_hi - current_lo
            current_lo, current_hi = lo, hi
        else:
            current_hi = max(current_hi, hi)
    if current_hi is not None:
        total += current_hi - current_lo
    return total


def overlap_distribution(ratios: Mapping[str, float]) -> SpeakerDistribution:
    """Normalize coverage ratios into speaker probabilities.

    No coverage at all (empty or all-zero input) yields the empty
    distribution rather than inventing a guess.
    """
    for speaker, coverage in ratios.items():
        if coverage < 0:
            raise ValidationError(f"coverage for {speaker!r} is negative: {coverage}")
    total = sum(ratios.values())
    if total == 0:
        return EMPTY_DISTRIBUTION
    return SpeakerDistribution({s: c / total for s, c in ratios.items() if c > 0})


def blend_llm(
    dist: SpeakerDistribution, llm_choice: str, weight: float
) -> SpeakerDistribution:
    """Convex-blend the overlap distribution with the LLM's choice.

    p'(s) = (1 - weight) * p(s) + weight * [s == llm_choice].  With an
    empty input distribution the choice becomes a point mass for any
    positive weight.  Entries that land exactly on zero are dropped so
    a zero weight returns the input unchanged.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValidationError(f"llm weight {weight} outside [0, 1]")
    if not dist:
        if weight > 0:
            return SpeakerDistribution({llm_choice: 1.0})
        return EMPTY_DISTRIBUTION

    blended = {}
    for speaker, prob in dist.items():
        p = (1.0 - weight) * prob
        if speaker == llm_choice:
            p += weight
        if p > 0:
            blended[speaker] = p
    if llm_choice not in dist.entries and weight > 0:
        blended[llm_choice] = weight
    return SpeakerDistribution(blended)


def assign(dist: SpeakerDistribution) -> tuple[str | None, float]:
    """Pick the most probable speaker; ties go to the lexicographically
    smallest id.  An empty distribution yields (None, 0.0)."""
    if not dist:
        return None, 0.0
    speaker, confidence = min(dist.items(), key=lambda kv: (-kv[1], kv[0]))
    return speaker, confidence


def merge(
    transcript: Transcript,
    diarization: Diarization,
    config: MergeConfig,
    oracle: "SpeakerOracle | None" = None,
) -> MergedTranscript:
    """Label every phrase of the transcript with its most likely speaker.

    When the LLM is enabled, each phrase's overlap distribution is
    blended with the oracle's choice at the configured weight.  An
    oracle abstention or failure leaves that phrase on its overlap-only
    distribution and flags it; the merge never aborts mid-file.
    """
    labeled = []
    for phrase in transcript.phrases:
        ratios = coverage_ratios(phrase, diarization)
        dist = overlap_distribution(ratios)

        llm_choice = None
        oracle_silent = False
        if config.llm_enabled:
            llm_choice = _consult_oracle(oracle, transcript, config.roles, phrase.id)
            if llm_choice is None:
                oracle_silent = True
            else:
                dist = blend_llm(dist, llm_choice, config.llm_weight)

        speaker, confidence = assign(dist)
        flagged = (
            oracle_silent
            or not ratios
            or not dist
            or confidence < config.flag_threshold
        )
        labeled.append(
            LabeledPhrase(
                phrase=phrase,
                assigned_speaker=speaker,
                distribution=dist,
                overlap_ratios=ratios,
                llm_choice=llm_choice,
                confidence=confidence,
                flagged=flagged,
            )
        )
    return MergedTranscript(tuple(labeled), config=config, source_id=transcript.source_id)


def _consult_oracle(
    oracle: "SpeakerOracle | None",
    transcript: Transcript,
    roles: Mapping[str, str],
    index: int,
) -> str | None:
    if oracle is None:
        return None
    try:
        return oracle.choose(transcript, roles, index)
    except Exception:
        logger.warning(
            "speaker oracle failed on phrase %d of %s; falling back to overlap only",
            index,
            transcript.source_id,
            exc_info=True,
        )
        return None
