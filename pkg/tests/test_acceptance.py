"""Release gate: the behaviors this toolkit must exhibit before it ships.

One test per criterion.  Each test checks its numbers at the stated
tolerance, enforces its time budget, and prints a single PASS line with
the measurement (visible under `pytest -s` or in captured output).
"""

from __future__ import annotations

import csv
import io
import json
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

import helpers
from diarfuse import cli
from diarfuse.formats import DEFAULT_TABLE, Diarization, Phrase, SpeakerTurn, tokenize
from diarfuse.merge import (
    EMPTY_DISTRIBUTION,
    MergeConfig,
    SpeakerDistribution,
    blend_llm,
    coverage_ratios,
    merge,
    overlap_distribution,
)
from diarfuse.pipeline.ledger import DONE, FAILED, JobStore
from diarfuse.scoring import (
    DELETE,
    INSERT,
    MATCH,
    SUBSTITUTE,
    FileScore,
    align,
    score_file,
    scores_from_csv,
)
from diarfuse.formats.documents import parse_merged
from diarfuse.formats.reference import parse_reference


def _clock(started: float) -> float:
    return time.perf_counter() - started


# -- 1: overlap distribution worked example -----------------------------


def test_a1_overlap_distribution_example():
    phrase = Phrase(id=0, start=0.0, end=10.0, text="example")
    dia = Diarization(
        turns=(SpeakerTurn("spk1", 0.0, 5.0), SpeakerTurn("spk2", 2.0, 10.0)),
        num_speakers=2,
    )
    coverage_ratios(phrase, dia)  # warm up

    started = time.perf_counter()
    ratios = coverage_ratios(phrase, dia)
    dist = overlap_distribution(ratios)
    elapsed = _clock(started)

    assert ratios == {"spk1": 0.5, "spk2": 0.8}
    assert abs(dist["spk1"] - 0.3846) < 1e-3
    assert abs(dist["spk2"] - 0.6154) < 1e-3
    assert abs(sum(dist.entries.values()) - 1.0) < 1e-9
    assert elapsed < 0.001
    print(f"PASS 1: overlap example within 1e-3 in {elapsed * 1e6:.0f}us")


# -- 2: blend worked example ---------------------------------------------


def test_a2_blend_example():
    dist = overlap_distribution({"spk1": 0.5, "spk2": 0.8})
    blend_llm(dist, "spk2", 0.25)  # warm up

    started = time.perf_counter()
    blended = blend_llm(dist, "spk2", 0.25)
    elapsed = _clock(started)

    assert abs(blended["spk1"] - 0.2885) < 1e-3
    assert abs(blended["spk2"] - 0.7115) < 1e-3
    assert elapsed < 0.001
    print(f"PASS 2: blend example within 1e-3 in {elapsed * 1e6:.0f}us")


# -- 3: blend properties over a random sweep -----------------------------


def test_a3_blend_property_sweep():
    rng = random.Random(3)
    started = time.perf_counter()
    for case in range(1000):
        n = rng.randint(1, 5)
        raw = [rng.uniform(0.01, 1.0) for _ in range(n)]
        total = sum(raw)
        dist = SpeakerDistribution({f"spk{i}": v / total for i, v in enumerate(raw)})
        choice = f"spk{rng.randrange(n + 1)}"  # sometimes outside the support
        low = rng.uniform(0.0, 1.0)
        high = rng.uniform(low, 1.0)

        identity = blend_llm(dist, choice, 0.0)
        for speaker in dist:
            assert abs(identity[speaker] - dist[speaker]) <= 1e-12

        a = blend_llm(dist, choice, low)
        b = blend_llm(dist, choice, high)
        assert abs(sum(a.entries.values()) - 1.0) <= 1e-9
        assert abs(sum(b.entries.values()) - 1.0) <= 1e-9
        # More weight never lowers the chosen speaker's mass.
        assert b[choice] >= a[choice] - 1e-12
        assert a[choice] >= dist.entries.get(choice, 0.0) - 1e-12
        # Past 0.5 the chosen speaker dominates every alternative.
        strong = blend_llm(dist, choice, 0.5 + rng.uniform(0.001, 0.5))
        assert all(strong[choice] >= p for s, p in strong.entries.items() if s != choice)

        point = blend_llm(EMPTY_DISTRIBUTION, choice, rng.uniform(0.001, 1.0))
        assert point.entries == {choice: 1.0}
    elapsed = _clock(started)
    assert elapsed < 1.0
    print(f"PASS 3: 1000-case blend sweep held in {elapsed:.3f}s")


# -- 4: coverage against an independent grid measure ---------------------


def _grid_snapped_layout(rng):
    """Random phrase + turns with all boundaries on the 1ms grid."""
    start_ms = rng.randrange(0, 5000)
    dur_ms = rng.randrange(500, 8000)
    phrase = Phrase(id=0, start=start_ms / 1000.0, end=(start_ms + dur_ms) / 1000.0, text="x")

    turns = []
    for i in range(rng.randint(1, 4)):
        for _ in range(rng.randint(0, 3)):
            t_start = rng.randrange(max(0, start_ms - 2000), start_ms + dur_ms + 2000)
            t_end = t_start + rng.randrange(100, 6000)
            turns.append((f"spk{i}", t_start / 1000.0, t_end / 1000.0))

    duplicated = overlapped = False
    if turns and rng.random() < 0.5:
        turns.append(turns[rng.randrange(len(turns))])  # exact duplicate turn
        duplicated = True
    if turns and rng.random() < 0.5:
        spk, t_start, t_end = turns[rng.randrange(len(turns))]
        shift = rng.randrange(0, 1000) / 1000.0
        turns.append((spk, max(0.0, t_start - 0.25), t_end + shift))
        overlapped = True
    return phrase, turns, duplicated, overlapped


def test_a4_coverage_matches_grid_oracle():
    rng = random.Random(4)
    seen_duplicate = seen_overlap = False
    started = time.perf_counter()
    for case in range(500):
        phrase, raw_turns, duplicated, overlapped = _grid_snapped_layout(rng)
        seen_duplicate |= duplicated
        seen_overlap |= overlapped
        speakers = {spk for spk, _, _ in raw_turns}
        dia = Diarization(
            turns=tuple(SpeakerTurn(spk, s, e) for spk, s, e in raw_turns),
            num_speakers=max(1, len(speakers)),
        )
        ratios = coverage_ratios(phrase, dia)
        oracle = helpers.grid_coverage(phrase.start, phrase.end, raw_turns)
        for speaker in set(ratios) | set(oracle):
            assert abs(ratios.get(speaker, 0.0) - oracle.get(speaker, 0.0)) <= 2e-3, (
                f"case {case}: {speaker} computed {ratios.get(speaker)} "
                f"grid {oracle.get(speaker)}"
            )
    elapsed = _clock(started)
    assert seen_duplicate and seen_overlap  # the sweep exercised both shapes
    assert elapsed < 10.0
    print(f"PASS 4: 500 layouts within 2e-3 of the grid measure in {elapsed:.2f}s")


# -- 5: alignment against an exhaustive edit-distance oracle -------------


def test_a5_alignment_matches_edit_distance_oracle():
    rng = random.Random(5)
    alphabet = ["aa", "bb", "cc", "dd", "ee"]
    started = time.perf_counter()
    for case in range(1000):
        ref = [rng.choice(alphabet) for _ in range(rng.randint(1, 12))]
        hyp = [rng.choice(alphabet) for _ in range(rng.randint(0, 12))]
        ops = align(ref, hyp)
        cost = sum(1 for op in ops if op.kind != MATCH)
        assert cost == helpers.edit_distance_oracle(ref, hyp), f"case {case}: {ref} {hyp}"

        kinds = [op.kind for op in ops]
        matched = kinds.count(MATCH)
        replaced = kinds.count(SUBSTITUTE)
        missed = kinds.count(DELETE)
        extra = kinds.count(INSERT)
        score = FileScore(
            source_id=f"case{case}",
            domain="",
            correct=matched,
            missed=missed,
            hallucinated=extra,
            replaced=replaced,
            labeled_right=matched,
            labeled_wrong=replaced,
        )
        assert score.ref_word_count == len(ref)
        assert score.hyp_word_count == len(hyp)
        assert score.wer == (missed + extra + replaced) / len(ref)
    elapsed = _clock(started)
    assert elapsed < 30.0
    print(f"PASS 5: 1000 alignments equal the oracle, books balance, in {elapsed:.2f}s")


# -- 6: error-rate formula and exact label identity ----------------------


def test_a6_wer_formula_and_label_identity():
    from diarfuse.formats import ReferenceScript
    from diarfuse.merge import LabeledPhrase, MergedTranscript

    # Ten reference words; one miss, one hallucination, one replacement.
    ref = ReferenceScript(
        (("Doctor", "alpha bravo charlie delta echo foxtrot golf hotel india juliet"),)
    )
    phrase = Phrase(
        id=0, start=0.0, end=4.0,
        text="extra alpha bravo charlie delta zulu foxtrot golf hotel india",
    )
    merged = MergedTranscript(
        labeled=(
            LabeledPhrase(
                phrase=phrase,
                assigned_speaker="spk0",
                distribution=SpeakerDistribution({"spk0": 1.0}),
                confidence=1.0,
            ),
        ),
        config=MergeConfig(roles={"spk0": "Doctor"}),
        source_id="fixture",
    )
    score = score_file(ref, merged)
    assert (score.missed, score.hallucinated, score.replaced) == (1, 1, 1)
    assert score.wer == 0.3  # exactly (1+1+1)/10

    # Randomized files: label bookkeeping is exact in integer arithmetic.
    rng = random.Random(6)
    for case in range(60):
        transcript, dia, reference, answers = helpers.build_case(rng, f"c{case}")
        config = MergeConfig(roles=dict(helpers.ROLES))
        result = score_file(reference, merge(transcript, dia, config, None))
        total = Fraction(result.labeled_right + result.labeled_wrong, result.ref_word_count)
        identity = Fraction(result.labeled_right, result.ref_word_count) + Fraction(
            result.labeled_wrong, result.ref_word_count
        )
        assert identity == total
        assert result.labeled_right + result.labeled_wrong == result.correct + result.replaced
        assert result.correct + result.missed + result.replaced == result.ref_word_count
        assert result.correct + result.hallucinated + result.replaced == result.hyp_word_count
    print("PASS 6: wer fixture is exactly 0.3; label identity exact on 60 random files")


# -- 7: normalization equivalences and idempotence -----------------------


def test_a7_normalization_equivalence_and_idempotence():
    pairs = [
        ("Ok,", "okay"),
        ("uhm...", "um"),
        ("titres", "titers"),
        ("X-Ray", "xray"),
        ("don’t", "don't"),
    ]
    for left, right in pairs:
        ops = align(tokenize(left, DEFAULT_TABLE), tokenize(right, DEFAULT_TABLE))
        assert [op.kind for op in ops] == [MATCH], f"{left!r} vs {right!r}: {ops}"

    rng = random.Random(7)
    pool = (
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
        "  .,;:!?()[]\"'’‘“”--_/\\&%#@*+=~`^|<>"
        "éüñßΔ中"
    )
    started = time.perf_counter()
    for _ in range(10000):
        text = "".join(rng.choice(pool) for _ in range(rng.randint(0, 30)))
        once = tokenize(text, DEFAULT_TABLE)
        again = tokenize(" ".join(once), DEFAULT_TABLE)
        assert again == once, f"not idempotent for {text!r}"
    elapsed = _clock(started)
    print(f"PASS 7: equivalence pairs align as matches; 10000-string idempotence in {elapsed:.2f}s")


# -- 8: batch determinism and reporting at corpus scale -------------------


def _batch(inputs: Path, out: Path) -> None:
    code = cli.main(
        [
            "batch",
            "--inputs", str(inputs),
            "--out", str(out),
            "--roles", "spk0=Doctor,spk1=Patient",
            "--parallelism", "4",
        ]
    )
    assert code == 0


def test_a8_corpus_batch_is_deterministic_and_reported(corpus_229, tmp_path):
    inputs, layout = corpus_229
    started = time.perf_counter()

    first, second = tmp_path / "run1", tmp_path / "run2"
    _batch(inputs, first)
    _batch(inputs, second)

    ids_first = sorted(p.name for p in (first / "jobs").iterdir())
    ids_second = sorted(p.name for p in (second / "jobs").iterdir())
    assert len(ids_first) == 229
    assert ids_first == ids_second
    for job_id in ids_first:
        for name in ("merged.json", "score.json"):
            a = (first / "jobs" / job_id / name).read_bytes()
            b = (second / "jobs" / job_id / name).read_bytes()
            assert a == b, f"{job_id}/{name} differs between runs"
    scores_csv = (first / "scores.csv").read_bytes()
    assert scores_csv == (second / "scores.csv").read_bytes()

    report_dir = tmp_path / "report"
    assert cli.main(["report", str(first / "scores.csv"), "--out", str(report_dir)]) == 0
    rows = list(
        csv.DictReader(io.StringIO((report_dir / "domains.csv").read_text(encoding="utf-8")))
    )
    assert [r["domain"] for r in rows] == sorted(layout) + ["overall"]

    # Medians re-derived from the raw scores with an independent routine.
    scores = scores_from_csv(scores_csv.decode("utf-8"))
    assert len(scores) == 229
    by_domain = {row["domain"]: row for row in rows}
    for domain, sids in layout.items():
        group = [s for s in scores if s.domain == domain]
        assert len(group) == len(sids)
        assert float(by_domain[domain]["median_wer"]) == helpers.median_by_hand(
            [s.wer for s in group]
        )
        assert float(by_domain[domain]["median_mislabel_rate"]) == helpers.median_by_hand(
            [s.mislabel_rate for s in group]
        )
    assert float(by_domain["overall"]["median_wer"]) == helpers.median_by_hand(
        [s.wer for s in scores]
    )

    elapsed = _clock(started)
    assert elapsed < 120.0
    print(f"PASS 8: 229-file batch byte-identical twice, medians verified, in {elapsed:.1f}s")


# -- 9: one bad input never takes down the batch --------------------------


def test_a9_batch_resilience(tmp_path, capsys):
    inputs = tmp_path / "inputs"
    layout = helpers.write_corpus(inputs, random.Random(9), n_files=8)
    all_sids = sorted(sid for sids in layout.values() for sid in sids)

    # One malformed transcript and one unusable oracle fixture.
    bad_transcript_sid, bad_oracle_sid = all_sids[2], all_sids[5]
    for domain, sids in layout.items():
        if bad_transcript_sid in sids:
            path = inputs / domain / f"{bad_transcript_sid}.transcript.json"
            path.write_text('{"phrases": [', encoding="utf-8")
        if bad_oracle_sid in sids:
            path = inputs / domain / f"{bad_oracle_sid}.oracle.json"
            path.write_text("{{{ not json", encoding="utf-8")

    out = tmp_path / "artifacts"
    assert (
        cli.main(
            [
                "batch",
                "--inputs", str(inputs),
                "--out", str(out),
                "--roles", "spk0=Doctor,spk1=Patient",
            ]
        )
        == 0
    )
    err = capsys.readouterr().err
    assert "7 done, 1 failed" in err

    store = JobStore(out / "ledger.jsonl")
    by_source = {job.source_id: job for job in store.jobs()}
    assert by_source[bad_transcript_sid].state == FAILED
    assert by_source[bad_transcript_sid].error
    for sid in all_sids:
        if sid != bad_transcript_sid:
            assert by_source[sid].state == DONE, f"{sid} should have finished"

    flagged_job = by_source[bad_oracle_sid]
    merged = parse_merged((out / "jobs" / flagged_job.job_id / "merged.json").read_bytes())
    assert merged.flagged_count == len(merged.labeled)

    print("PASS 9: malformed input FAILED alone; unusable oracle ran fully flagged")
