"""Score generated transcripts against reference scripts.

Reference and hypothesis are flattened to normalized word streams and
aligned by minimum edit distance.  Alignment ops classify every word:
MATCH is a correctly transcribed word, DELETE a missed one, INSERT a
hallucinated one, SUBSTITUTE a replaced one.  WER is
(missed + hallucinated + replaced) / reference word count.  Speaker
labeling is scored over the aligned pairs: a MATCH or SUBSTITUTE whose
hypothesis word carries the right role counts toward label_score, a
wrong or UNKNOWN role counts toward mislabel_rate.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

from diarfuse.errors import ParseError, ValidationError
from diarfuse.formats.models import ReferenceScript
from diarfuse.formats.normalize import NormalizationTable, tokenize
from diarfuse.merge import UNKNOWN_LABEL, MergedTranscript

MATCH = "MATCH"
SUBSTITUTE = "SUBSTITUTE"
DELETE = "DELETE"
INSERT = "INSERT"

OVERALL_DOMAIN = "overall"


@dataclass(frozen=True)
class AlignmentOp:
    """One step of a reference/hypothesis alignment.

    MATCH and SUBSTITUTE consume a word from both streams, DELETE only
    from the reference, INSERT only from the hypothesis.
    """

    kind: str
    ref_index: int | None = None
    hyp_index: int | None = None

    def __post_init__(self):
        if self.kind in (MATCH, SUBSTITUTE):
            if self.ref_index is None or self.hyp_index is None:
                raise ValidationError(f"{self.kind} op needs both word indices")
        elif self.kind == DELETE:
            if self.ref_index is None or self.hyp_index is not None:
                raise ValidationError("DELETE op carries a reference index only")
        elif self.kind == INSERT:
            if self.hyp_index is None or self.ref_index is not None:
                raise ValidationError("INSERT op carries a hypothesis index only")
        else:
            raise ValidationError(f"unknown alignment op kind {self.kind!r}")


def align(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> list[AlignmentOp]:
    """Minimum-edit-distance alignment of two normalized token streams.

    Unit cost for SUBSTITUTE/DELETE/INSERT, zero for MATCH.  Among
    equal-cost scripts the one with the most substitutions is chosen
    (a replaced word is one error; a missed-plus-hallucinated pair is
    two), which also makes the category counts symmetric: swapping the
    streams swaps DELETE and INSERT counts and preserves the rest.
    Residual ties in the backtrace prefer MATCH, then SUBSTITUTE, then
    DELETE, then INSERT.  Consuming the ops in order reproduces both
    streams.
    """
    n, m = len(ref_tokens), len(hyp_tokens)
    # cost[i][j] = minimal edits aligning ref[:i] with hyp[:j];
    # subs[i][j] = most substitutions on any minimal-cost script.
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    subs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i
    for j in range(1, m + 1):
        cost[0][j] = j
    for i in range(1, n + 1):
        ref_word = ref_tokens[i - 1]
        prev_cost, row_cost = cost[i - 1], cost[i]
        prev_subs, row_subs = subs[i - 1], subs[i]
        for j in range(1, m + 1):
            if ref_word == hyp_tokens[j - 1]:
                # A match never loses: neighboring cells differ by at most 1,
                # and skipping a free match cannot buy extra substitutions.
                row_cost[j] = prev_cost[j - 1]
                row_subs[j] = prev_subs[j - 1]
            else:
                best = 1 + min(prev_cost[j - 1], prev_cost[j], row_cost[j - 1])
                row_cost[j] = best
                most = -1
                if prev_cost[j - 1] + 1 == best:
                    most = prev_subs[j - 1] + 1
                if prev_cost[j] + 1 == best:
                    most = max(most, prev_subs[j])
                if row_cost[j - 1] + 1 == best:
                    most = max(most, row_subs[j - 1])
                row_subs[j] = most

    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        here_cost, here_subs = cost[i][j], subs[i][j]
        if (
            i > 0
            and j > 0
            and ref_tokens[i - 1] == hyp_tokens[j - 1]
            and here_cost == cost[i - 1][j - 1]
            and here_subs == subs[i - 1][j - 1]
        ):
            ops.append(AlignmentOp(MATCH, ref_index=i - 1, hyp_index=j - 1))
            i, j = i - 1, j - 1
        elif (
            i > 0
            and j > 0
            and ref_tokens[i - 1] != hyp_tokens[j - 1]
            and here_cost == cost[i - 1][j - 1] + 1
            and here_subs == subs[i - 1][j - 1] + 1
        ):
            ops.append(AlignmentOp(SUBSTITUTE, ref_index=i - 1, hyp_index=j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and here_cost == cost[i - 1][j] + 1 and here_subs == subs[i - 1][j]:
            ops.append(AlignmentOp(DELETE, ref_index=i - 1))
            i -= 1
        else:
            ops.append(AlignmentOp(INSERT, hyp_index=j - 1))
            j -= 1
    ops.reverse()
    return ops


@dataclass(frozen=True)
class FileScore:
    """Word and label accounting for one file.

    All fields are integer counts; the rates are derived properties so
    the bookkeeping identities stay checkable in exact arithmetic.
    labeled_right/labeled_wrong partition the aligned pairs (MATCH and
    SUBSTITUTE ops) by whether the hypothesis word carried the correct
    speaker role.
    """

    source_id: str
    domain: str
    correct: int
    missed: int
    hallucinated: int
    replaced: int
    labeled_right: int
    labeled_wrong: int

    def __post_init__(self):
        for name in ("correct", "missed", "hallucinated", "replaced", "labeled_right", "labeled_wrong"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} count is negative")
        if self.labeled_right + self.labeled_wrong != self.correct + self.replaced:
            raise ValidationError(
                "label counts must partition the aligned pairs: "
                f"{self.labeled_right} + {self.labeled_wrong} != {self.correct} + {self.replaced}"
            )
        if self.ref_word_count == 0:
            raise ValidationError("reference has zero words: undefined WER")

    @property
    def ref_word_count(self) -> int:
        return self.correct + self.missed + self.replaced

    @property
    def hyp_word_count(self) -> int:
        return self.correct + self.hallucinated + self.replaced

    @property
    def wer(self) -> float:
        return (self.missed + self.hallucinated + self.replaced) / self.ref_word_count

    @property
    def label_score(self) -> float:
        return self.labeled_right / self.ref_word_count

    @property
    def mislabel_rate(self) -> float:
        return self.labeled_wrong / self.ref_word_count

    @property
    def correct_pct(self) -> float:
        return self.correct / self.ref_word_count

    @property
    def missed_pct(self) -> float:
        return self.missed / self.ref_word_count

    @property
    def replaced_pct(self) -> float:
        return self.replaced / self.ref_word_count

    @property
    def hallucinated_pct(self) -> float:
        # Hallucinations are a share of the generated text, not the
        # reference; an empty hypothesis hallucinated nothing.
        if self.hyp_word_count == 0:
            return 0.0
        return self.hallucinated / self.hyp_word_count


@dataclass(frozen=True)
class DomainReport:
    """Medians over one domain's file scores (or over all files)."""

    domain: str
    file_count: int
    median_wer: float
    median_mislabel_rate: float
    median_correct_pct: float
    median_missed_pct: float
    median_hallucinated_pct: float
    median_replaced_pct: float

    def __post_init__(self):
        if self.file_count <= 0:
            raise ValidationError("a domain report needs at least one file")


def _role_matches(ref_label: str, hyp_role: str) -> bool:
    # UNKNOWN is the absence of an assignment, never a correct label.
    if hyp_role == UNKNOWN_LABEL:
        return False
    return ref_label.strip().casefold() == hyp_role.strip().casefold()


def score_file(
    ref: ReferenceScript,
    merged: MergedTranscript,
    table: NormalizationTable | None = None,
) -> FileScore:
    """Align one merged transcript against its reference and count.

    Both sides are flattened to full-file token streams: each reference
    token keeps its utterance's speaker label, each hypothesis token the
    role of its phrase's assigned speaker (via the merge config's roles
    map; unmapped or unassigned speakers score as UNKNOWN).  Label
    comparison is case-insensitive.
    """
    ref_tokens: list[str] = []
    ref_labels: list[str] = []
    for label, utterance in ref.entries:
        for token in tokenize(utterance, table):
            ref_tokens.append(token)
            ref_labels.append(label)
    if not ref_tokens:
        raise ValidationError("reference has zero words: undefined WER")

    roles = merged.config.roles
    hyp_tokens: list[str] = []
    hyp_roles: list[str] = []
    for lp in merged.labeled:
        if lp.assigned_speaker is None:
            role = UNKNOWN_LABEL
        else:
            role = roles.get(lp.assigned_speaker, UNKNOWN_LABEL)
        for token in tokenize(lp.phrase.text, table):
            hyp_tokens.append(token)
            hyp_roles.append(role)

    correct = missed = hallucinated = replaced = 0
    labeled_right = labeled_wrong = 0
    for op in align(ref_tokens, hyp_tokens):
        if op.kind == DELETE:
            missed += 1
            continue
        if op.kind == INSERT:
            hallucinated += 1
            continue
        if op.kind == MATCH:
            correct += 1
        else:
            replaced += 1
        if _role_matches(ref_labels[op.ref_index], hyp_roles[op.hyp_index]):
            labeled_right += 1
        else:
            labeled_wrong += 1

    return FileScore(
        source_id=merged.source_id,
        domain=ref.domain,
        correct=correct,
        missed=missed,
        hallucinated=hallucinated,
        replaced=replaced,
        labeled_right=labeled_right,
        labeled_wrong=labeled_wrong,
    )


def aggregate(scores: Sequence[FileScore]) -> tuple[list[DomainReport], DomainReport]:
    """Per-domain reports (sorted by domain) plus the overall report.

    Medians use the conventional even-count rule (mean of the two
    middle values).
    """
    if not scores:
        raise ValidationError("cannot aggregate zero scores")
    by_domain: dict[str, list[FileScore]] = {}
    for score in scores:
        by_domain.setdefault(score.domain, []).append(score)
    reports = [
        _report(domain, group) for domain, group in sorted(by_domain.items())
    ]
    return reports, _report(OVERALL_DOMAIN, list(scores))


def _report(domain: str, group: list[FileScore]) -> DomainReport:
    return DomainReport(
        domain=domain,
        file_count=len(group),
        median_wer=statistics.median(s.wer for s in group),
        median_mislabel_rate=statistics.median(s.mislabel_rate for s in group),
        median_correct_pct=statistics.median(s.correct_pct for s in group),
        median_missed_pct=statistics.median(s.missed_pct for s in group),
        median_hallucinated_pct=statistics.median(s.hallucinated_pct for s in group),
        median_replaced_pct=statistics.median(s.replaced_pct for s in group),
    )


def histogram(values: Iterable[float], bin_width: float = 0.05) -> list[tuple[float, float, int]]:
    """Fixed-width bins over non-negative values, as (lo, hi, count).

    Bins run contiguously from 0 through the largest populated bin,
    zero-count bins included, so the counts always sum to the number of
    values.
    """
    if bin_width <= 0:
        raise ValidationError(f"bin width must be positive, got {bin_width}")
    counts: dict[int, int] = {}
    for value in values:
        if value < 0:
            raise ValidationError(f"histogram values must be non-negative, got {value}")
        index = int(value / bin_width)
        counts[index] = counts.get(index, 0) + 1
    if not counts:
        return []
    top = max(counts)
    return [
        (index * bin_width, (index + 1) * bin_width, counts.get(index, 0))
        for index in range(top + 1)
    ]


def score_to_dict(score: FileScore) -> dict:
    """Wire form of a FileScore: the counts plus the derived rates."""
    return {
        "source_id": score.source_id,
        "domain": score.domain,
        "ref_words": score.ref_word_count,
        "hyp_words": score.hyp_word_count,
        "correct": score.correct,
        "missed": score.missed,
        "hallucinated": score.hallucinated,
        "replaced": score.replaced,
        "labeled_right": score.labeled_right,
        "labeled_wrong": score.labeled_wrong,
        "wer": score.wer,
        "label_score": score.label_score,
        "mislabel_rate": score.mislabel_rate,
    }


def score_from_dict(data: dict) -> FileScore:
    try:
        return FileScore(
            source_id=str(data["source_id"]),
            domain=str(data["domain"]),
            correct=int(data["correct"]),
            missed=int(data["missed"]),
            hallucinated=int(data["hallucinated"]),
            replaced=int(data["replaced"]),
            labeled_right=int(data["labeled_right"]),
            labeled_wrong=int(data["labeled_wrong"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"score record: {exc}") from exc


# CSV layouts.  Scores: one row per file with every count and rate.
# Distributions: the per-file values behind the WER/mislabel histograms.
# Reports: one row per domain plus the overall row.

SCORE_FIELDS = [
    "source_id",
    "domain",
    "ref_words",
    "hyp_words",
    "correct",
    "missed",
    "hallucinated",
    "replaced",
    "labeled_right",
    "labeled_wrong",
    "wer",
    "label_score",
    "mislabel_rate",
]

DISTRIBUTION_FIELDS = ["source_id", "domain", "wer", "mislabel_rate"]

REPORT_FIELDS = [
    "domain",
    "file_count",
    "median_wer",
    "median_mislabel_rate",
    "median_correct_pct",
    "median_missed_pct",
    "median_hallucinated_pct",
    "median_replaced_pct",
]

HISTOGRAM_FIELDS = ["metric", "bin_lo", "bin_hi", "count"]


def _writer(out: io.StringIO):
    return csv.writer(out, lineterminator="\n")


def scores_to_csv(scores: Sequence[FileScore]) -> str:
    out = io.StringIO()
    writer = _writer(out)
    writer.writerow(SCORE_FIELDS)
    for s in scores:
        writer.writerow(
            [
                s.source_id,
                s.domain,
                s.ref_word_count,
                s.hyp_word_count,
                s.correct,
                s.missed,
                s.hallucinated,
                s.replaced,
                s.labeled_right,
                s.labeled_wrong,
                repr(s.wer),
                repr(s.label_score),
                repr(s.mislabel_rate),
            ]
        )
    return out.getvalue()


def scores_from_csv(text: str) -> list[FileScore]:
    """Parse a scores CSV; the integer counts are authoritative and the
    rate columns are ignored (they are derived)."""
    reader = csv.DictReader(io.StringIO(text))
    scores = []
    for line, row in enumerate(reader, start=2):
        try:
            score = FileScore(
                source_id=row["source_id"],
                domain=row["domain"],
                correct=int(row["correct"]),
                missed=int(row["missed"]),
                hallucinated=int(row["hallucinated"]),
                replaced=int(row["replaced"]),
                labeled_right=int(row["labeled_right"]),
                labeled_wrong=int(row["labeled_wrong"]),
            )
            # The word-count columns are redundant; a mismatch means the
            # row was corrupted or hand-edited inconsistently.
            if int(row["ref_words"]) != score.ref_word_count:
                raise ValueError("ref_words disagrees with the category counts")
            if int(row["hyp_words"]) != score.hyp_word_count:
                raise ValueError("hyp_words disagrees with the category counts")
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            raise ParseError(f"scores CSV line {line}: {exc}", line=line) from exc
        scores.append(score)
    return scores


def distributions_to_csv(scores: Sequence[FileScore]) -> str:
    out = io.StringIO()
    writer = _writer(out)
    writer.writerow(DISTRIBUTION_FIELDS)
    for s in scores:
        writer.writerow([s.source_id, s.domain, repr(s.wer), repr(s.mislabel_rate)])
    return out.getvalue()


def reports_to_csv(reports: Sequence[DomainReport], overall: DomainReport) -> str:
    out = io.StringIO()
    writer = _writer(out)
    writer.writerow(REPORT_FIELDS)
    for report in [*reports, overall]:
        writer.writerow(
            [
                report.domain,
                report.file_count,
                repr(report.median_wer),
                repr(report.median_mislabel_rate),
                repr(report.median_correct_pct),
                repr(report.median_missed_pct),
                repr(report.median_hallucinated_pct),
                repr(report.median_replaced_pct),
            ]
        )
    return out.getvalue()


def histograms_to_csv(scores: Sequence[FileScore], bin_width: float = 0.05) -> str:
    out = io.StringIO()
    writer = _writer(out)
    writer.writerow(HISTOGRAM_FIELDS)
    for metric, values in [
        ("wer", [s.wer for s in scores]),
        ("mislabel_rate", [s.mislabel_rate for s in scores]),
    ]:
        for lo, hi, count in histogram(values, bin_width):
            writer.writerow([metric, repr(lo), repr(hi), count])
    return out.getvalue()
