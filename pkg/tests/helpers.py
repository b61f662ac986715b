"""Shared test fixtures: synthetic dialog corpus and independent oracles.

The oracles here deliberately avoid the library's own algorithms: the
edit-distance oracle enumerates edit scripts, and the coverage oracle
measures interval overlap on a fine time grid.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from diarfuse.formats.documents import emit_transcript
from diarfuse.formats.models import (
    Diarization,
    Phrase,
    ReferenceScript,
    SpeakerTurn,
    Transcript,
    WordToken,
)
from diarfuse.formats.reference import emit_reference
from diarfuse.formats.rttm import emit_rttm

ROLES = {"spk0": "Doctor", "spk1": "Patient"}

DOMAINS = ["Cardiac", "Dermatological", "Gastrointestinal", "Musculoskeletal", "Respiratory"]

VOCAB = [
    "the", "a", "and", "of", "in", "your", "you", "it", "is", "was",
    "pain", "chest", "breath", "deep", "take", "feel", "since", "morning",
    "rash", "skin", "arm", "left", "right", "knee", "joint", "swelling",
    "stomach", "nausea", "appetite", "fever", "cough", "heart", "rate",
    "pressure", "blood", "test", "results", "week", "days", "night",
    "medication", "dose", "twice", "daily", "better", "worse", "started",
    "history", "family", "doctor", "visit", "sleep", "water", "okay",
]

# Words with table equivalents, used to exercise normalization.
EQUIVALENT_SPELLINGS = {"okay": "ok", "um": "uhm", "titers": "titres"}


# -- dialog generation ------------------------------------------------


def make_words(rng: random.Random, count: int) -> list[str]:
    return [rng.choice(VOCAB) for _ in range(count)]


def decorate(words: list[str], rng: random.Random) -> str:
    """Reference-script surface form: capitalization and punctuation."""
    out = []
    for i, word in enumerate(words):
        if rng.random() < 0.3 and word in EQUIVALENT_SPELLINGS:
            word = EQUIVALENT_SPELLINGS[word]
        if i == 0:
            word = word.capitalize()
        if i == len(words) - 1:
            word += "."
        elif rng.random() < 0.1:
            word += ","
        out.append(word)
    return " ".join(out)


def corrupt(
    words: list[str],
    rng: random.Random,
    drop_rate: float = 0.0,
    replace_rate: float = 0.0,
    insert_rate: float = 0.0,
) -> list[str]:
    """ASR-style errors against the reference words."""
    out = []
    for word in words:
        roll = rng.random()
        if roll < drop_rate:
            continue
        if roll < drop_rate + replace_rate:
            out.append(rng.choice(VOCAB))
        else:
            out.append(word)
        if rng.random() < insert_rate:
            out.append(rng.choice(VOCAB))
    if not out:
        out.append(rng.choice(VOCAB))
    return out


def build_case(
    rng: random.Random,
    source_id: str,
    n_phrases: int = 12,
    error_rate: float = 0.05,
    wrong_oracle_rate: float = 0.1,
    abstain_rate: float = 0.1,
):
    """One synthetic interview: transcript, diarization, reference, oracle.

    The speaker schedule is the ground truth: diarization turns track it
    with slight jitter, the reference carries the true role labels, and
    the oracle fixture mostly answers with the true label.
    """
    phrases = []
    ref_entries = []
    oracle_answers = {}
    turns = []
    clock = 0.0
    speakers = list(ROLES)
    for index in range(n_phrases):
        speaker = speakers[index % len(speakers)]
        base_words = make_words(rng, rng.randint(3, 8))
        hyp_words = corrupt(
            base_words, rng, drop_rate=error_rate, replace_rate=error_rate, insert_rate=error_rate
        )
        start = clock + rng.uniform(0.05, 0.3)
        duration = max(0.8, 0.35 * len(hyp_words))
        end = start + duration
        clock = end

        word_tokens = []
        step = duration / max(1, len(hyp_words))
        for w_index, word in enumerate(hyp_words):
            w_start = start + w_index * step
            word_tokens.append(
                WordToken(
                    text=word,
                    start=round(w_start, 3),
                    end=round(min(end, w_start + step), 3),
                    confidence=round(rng.uniform(0.55, 0.99), 3),
                )
            )
        phrases.append(
            Phrase(
                id=index,
                start=round(start, 3),
                end=round(end, 3),
                text=" ".join(hyp_words),
                words=tuple(word_tokens),
            )
        )
        # Diarization hugs the phrase span with jitter; the true speaker
        # keeps majority coverage.
        turns.append(
            SpeakerTurn(
                speaker_id=speaker,
                start=round(max(0.0, start - rng.uniform(0.0, 0.1)), 3),
                end=round(end + rng.uniform(0.0, 0.1), 3),
            )
        )
        ref_entries.append((ROLES[speaker], decorate(base_words, rng)))

        roll = rng.random()
        if roll < abstain_rate:
            oracle_answers[index] = "hard to say"
        elif roll < abstain_rate + wrong_oracle_rate:
            other = speakers[(speakers.index(speaker) + 1) % len(speakers)]
            oracle_answers[index] = ROLES[other]
        else:
            oracle_answers[index] = ROLES[speaker]

    transcript = Transcript(
        phrases=tuple(phrases), source_id=source_id, duration=round(clock + 0.5, 3)
    )
    diarization = Diarization(turns=tuple(turns), num_speakers=len(speakers))
    reference = ReferenceScript(entries=tuple(ref_entries))
    return transcript, diarization, reference, oracle_answers


def write_case(directory: Path, source_id: str, case) -> None:
    transcript, diarization, reference, oracle_answers = case
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{source_id}.transcript.json").write_bytes(emit_transcript(transcript))
    (directory / f"{source_id}.rttm").write_bytes(emit_rttm(diarization, file_id=source_id))
    (directory / f"{source_id}.reference.txt").write_bytes(emit_reference(reference))
    (directory / f"{source_id}.oracle.json").write_text(
        json.dumps({str(k): v for k, v in oracle_answers.items()}, indent=2, sort_keys=True),
        encoding="utf-8",
    )


def write_corpus(root: Path, rng: random.Random, n_files: int = 229) -> dict[str, list[str]]:
    """Write a batch corpus split across the five domains.

    Returns {domain: [source ids]}; domain sizes differ by at most one.
    """
    layout: dict[str, list[str]] = {domain: [] for domain in DOMAINS}
    for index in range(n_files):
        domain = DOMAINS[index % len(DOMAINS)]
        source_id = f"{domain.lower()[:4]}{index:03d}"
        case = build_case(rng, source_id, n_phrases=rng.randint(6, 14))
        write_case(root / domain, source_id, case)
        layout[domain].append(source_id)
    return layout


# -- independent oracles ----------------------------------------------


def edit_distance_oracle(ref: list[str], hyp: list[str]) -> int:
    """Minimal edit cost by exhaustive search over edit scripts.

    Iterative deepening: try budgets 0, 1, 2, ... and depth-first over
    {match, substitute, delete, insert}.  Branches are pruned when the
    remaining length imbalance exceeds the budget, accepted early when
    delete-rest-insert-rest fits it, and dead (i, j, budget) states are
    not revisited.  Independent of the library's dynamic program.
    """

    def search(budget: int) -> bool:
        dead: set[tuple[int, int, int]] = set()

        def feasible(i: int, j: int, left: int) -> bool:
            while i < len(ref) and j < len(hyp) and ref[i] == hyp[j]:
                i, j = i + 1, j + 1  # a free match never hurts optimality
            ref_left, hyp_left = len(ref) - i, len(hyp) - j
            if abs(ref_left - hyp_left) > left:
                return False
            if ref_left + hyp_left <= left:
                return True  # delete the rest, insert the rest
            if ref_left == 0 or hyp_left == 0:
                return False  # imbalance check above already decided
            key = (i, j, left)
            if key in dead:
                return False
            if (
                feasible(i + 1, j + 1, left - 1)
                or feasible(i + 1, j, left - 1)
                or feasible(i, j + 1, left - 1)
            ):
                return True
            dead.add(key)
            return False

        return feasible(0, 0, budget)

    budget = 0
    while True:
        if search(budget):
            return budget
        budget += 1


def grid_coverage(
    phrase_start: float,
    phrase_end: float,
    turns: list[tuple[str, float, float]],
    cell: float = 0.001,
) -> dict[str, float]:
    """Coverage ratios measured on a fine time grid (cell midpoints)."""
    duration = phrase_end - phrase_start
    if duration <= 0:
        return {
            speaker: 1.0
            for speaker, start, end in turns
            if start <= phrase_start <= end
        }
    n_cells = max(1, round(duration / cell))
    counts: dict[str, int] = {}
    for speaker in {speaker for speaker, _, _ in turns}:
        intervals = [(s, e) for sp, s, e in turns if sp == speaker]
        covered = 0
        for k in range(n_cells):
            mid = phrase_start + (k + 0.5) * duration / n_cells
            if any(s <= mid <= e for s, e in intervals):
                covered += 1
        if covered:
            counts[speaker] = covered
    return {speaker: covered / n_cells for speaker, covered in counts.items()}


def median_by_hand(values: list[float]) -> float:
    """Median with the even-count mean-of-middle-two rule, written out."""
    ordered = sorted(values)
    n = len(ordered)
    if n % 2 == 1:
        return ordered[n // 2]
    return (ordered[n // 2 - 1] + ordered[n // 2]) / 2
