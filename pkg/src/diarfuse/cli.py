"""Command-line entry points.

Subcommands: merge one file, score a merged document against its
reference, run a batch over a directory tree, turn a scores CSV into
domain reports and histogram data, and serve the review API.

Exit codes: 0 success, 1 validation or usage error, 2 input parse
failure, 3 downstream (oracle/store) failure after retries.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from diarfuse.errors import (
    DownstreamError,
    NotFoundError,
    ParseError,
    ValidationError,
)
from diarfuse.formats.documents import emit_merged, parse_merged, parse_transcript
from diarfuse.formats.normalize import DEFAULT_TABLE
from diarfuse.formats.reference import parse_reference
from diarfuse.formats.rttm import parse_rttm
from diarfuse.llm_oracle import (
    ENDPOINT_ENV_VAR,
    HttpChatOracle,
    OracleConfig,
    SpeakerOracle,
    StubOracle,
)
from diarfuse.merge import (
    DEFAULT_FLAG_THRESHOLD,
    DEFAULT_LLM_WEIGHT,
    MergeConfig,
    merge,
)
from diarfuse.pipeline.config import PipelineConfig, parse_config_file, parse_roles
from diarfuse.pipeline.ledger import DONE, FAILED, JobStore
from diarfuse.pipeline.runner import JobSpec, Runner
from diarfuse.pipeline.store import ObjectStore
from diarfuse.scoring import (
    aggregate,
    distributions_to_csv,
    histograms_to_csv,
    reports_to_csv,
    score_file,
    scores_from_csv,
    scores_to_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_DOWNSTREAM = 3

TRANSCRIPT_SUFFIX = ".transcript.json"
RTTM_SUFFIX = ".rttm"
REFERENCE_SUFFIX = ".reference.txt"
FIXTURE_SUFFIX = ".oracle.json"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit 1 instead of 2; exit code 2
    is reserved for input parse failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diarfuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p_merge = sub.add_parser("merge", help="label one transcript's speakers")
    p_merge.add_argument("--transcript", required=True, help="transcript JSON path")
    p_merge.add_argument("--rttm", required=True, help="diarization RTTM path")
    p_merge.add_argument("--weight", type=float, default=DEFAULT_LLM_WEIGHT,
                         help="LLM blend weight in [0,1] (default %(default)s)")
    p_merge.add_argument("--roles", default="",
                         help="speaker display labels, e.g. spk0=Doctor,spk1=Patient")
    p_merge.add_argument("--flag-threshold", type=float, default=DEFAULT_FLAG_THRESHOLD,
                         help="flag phrases below this confidence (default %(default)s)")
    p_merge.add_argument("--llm-endpoint", default="",
                         help=f"chat-completions endpoint (or ${ENDPOINT_ENV_VAR})")
    p_merge.add_argument("--oracle-fixture", default="",
                         help="scripted oracle answers JSON (overrides the endpoint)")
    p_merge.add_argument("--out", default="", help="output path (default: stdout)")
    p_merge.set_defaults(func=cmd_merge)

    p_score = sub.add_parser("score", help="score a merged document against a reference")
    p_score.add_argument("--merged", required=True, help="merged document path")
    p_score.add_argument("--reference", required=True, help="reference script path")
    p_score.add_argument("--domain", default="", help="domain tag for the score row")
    p_score.add_argument("--out", default="",
                         help="scores CSV to create or append to (default: stdout)")
    p_score.set_defaults(func=cmd_score)

    p_batch = sub.add_parser("batch", help="merge and score a directory of files")
    p_batch.add_argument("--inputs", required=True,
                         help="directory holding *%s sets; first-level subdirectories "
                              "name each file's domain" % TRANSCRIPT_SUFFIX)
    p_batch.add_argument("--out", required=True, help="artifact directory")
    p_batch.add_argument("--config", default="", help="key=value config file")
    p_batch.add_argument("--parallelism", type=int, default=0,
                         help="worker count (default: config file value or 2)")
    p_batch.add_argument("--weight", type=float, default=None, help="LLM blend weight")
    p_batch.add_argument("--roles", default=None, help="speaker display labels")
    p_batch.add_argument("--flag-threshold", type=float, default=None)
    p_batch.add_argument("--llm-endpoint", default="")
    p_batch.set_defaults(func=cmd_batch)

    p_report = sub.add_parser("report", help="aggregate a scores CSV into domain reports")
    p_report.add_argument("scores", help="scores CSV produced by score/batch")
    p_report.add_argument("--out", required=True, help="directory for report CSVs")
    p_report.add_argument("--bin-width", type=float, default=0.05,
                          help="histogram bin width (default %(default)s)")
    p_report.set_defaults(func=cmd_report)

    p_serve = sub.add_parser("serve", help="serve the review API")
    p_serve.add_argument("--artifacts", required=True,
                         help="artifact directory (ledger + job outputs)")
    p_serve.add_argument("--config", default="", help="key=value config file")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--llm-endpoint", default="")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def _resolve_oracle(fixture: str, endpoint: str) -> tuple[SpeakerOracle | None, bool]:
    """Oracle from flags/environment; second value is llm_enabled."""
    if fixture:
        return StubOracle.from_file(fixture), True
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR, "")
    if endpoint:
        return HttpChatOracle(OracleConfig(endpoint=endpoint)), True
    return None, False


def cmd_merge(args) -> int:
    transcript = parse_transcript(_read(args.transcript))
    diarization = parse_rttm(_read(args.rttm))
    oracle, llm_enabled = _resolve_oracle(args.oracle_fixture, args.llm_endpoint)
    config = MergeConfig(
        llm_weight=args.weight,
        roles=parse_roles(args.roles),
        flag_threshold=args.flag_threshold,
        llm_enabled=llm_enabled,
    )
    merged = merge(transcript, diarization, config, oracle)
    data = emit_merged(merged)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    print(
        f"flagged {merged.flagged_count} of {len(merged.labeled)} phrases",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_score(args) -> int:
    merged = parse_merged(_read(args.merged))
    reference = parse_reference(_read(args.reference), domain=args.domain)
    score = score_file(reference, merged, DEFAULT_TABLE)
    csv_text = scores_to_csv([score])
    if not args.out:
        sys.stdout.write(csv_text)
        return EXIT_OK
    out = Path(args.out)
    if out.exists() and out.stat().st_size > 0:
        # Append just the row; the file already has its header.
        row = csv_text.splitlines()[1] + "\n"
        with out.open("a", encoding="utf-8") as handle:
            handle.write(row)
    else:
        out.write_text(csv_text, encoding="utf-8")
    return EXIT_OK


def _discover_specs(inputs: Path, base: MergeConfig) -> list[JobSpec]:
    """Walk the inputs tree for transcript/RTTM/reference/fixture sets.

    A first-level subdirectory names the domain of everything beneath
    it; files directly under the root have no domain.
    """
    if not inputs.is_dir():
        raise ValidationError(f"inputs directory not found: {inputs}")
    specs = []
    for path in sorted(inputs.rglob(f"*{TRANSCRIPT_SUFFIX}")):
        stem = path.name[: -len(TRANSCRIPT_SUFFIX)]
        relative = path.relative_to(inputs)
        domain = relative.parts[0] if len(relative.parts) > 1 else ""
        rttm = path.with_name(stem + RTTM_SUFFIX)
        if not rttm.is_file():
            raise ValidationError(f"transcript {path} has no diarization at {rttm}")
        reference = path.with_name(stem + REFERENCE_SUFFIX)
        fixture = path.with_name(stem + FIXTURE_SUFFIX)
        config = base
        if fixture.is_file() and not base.llm_enabled:
            config = MergeConfig(
                llm_weight=base.llm_weight,
                roles=base.roles,
                flag_threshold=base.flag_threshold,
                llm_enabled=True,
            )
        specs.append(
            JobSpec(
                source_id=stem,
                transcript=str(path),
                rttm=str(rttm),
                reference=str(reference) if reference.is_file() else None,
                oracle_fixture=str(fixture) if fixture.is_file() else None,
                config=config,
                domain=domain,
            )
        )
    if not specs:
        raise ValidationError(f"no *{TRANSCRIPT_SUFFIX} files under {inputs}")
    return specs


def cmd_batch(args) -> int:
    file_config = parse_config_file(args.config) if args.config else PipelineConfig()
    base = file_config.merge
    llm_endpoint = args.llm_endpoint or file_config.llm_endpoint
    merge_config = MergeConfig(
        llm_weight=base.llm_weight if args.weight is None else args.weight,
        roles=base.roles if args.roles is None else parse_roles(args.roles),
        flag_threshold=(
            base.flag_threshold if args.flag_threshold is None else args.flag_threshold
        ),
        llm_enabled=base.llm_enabled or bool(llm_endpoint),
    )
    parallelism = args.parallelism or file_config.parallelism

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store = JobStore(out / "ledger.jsonl")
    runner = Runner(
        store,
        out,
        object_store=ObjectStore.from_env(endpoint=file_config.s3_endpoint),
        parallelism=parallelism,
        llm_endpoint=llm_endpoint,
    )
    for spec in _discover_specs(Path(args.inputs), merge_config):
        runner.enqueue(spec)
    runner.run_until_drained()

    scores = runner.collect_scores()
    (out / "scores.csv").write_text(scores_to_csv(scores), encoding="utf-8")
    counts = store.counts()
    print(
        f"batch complete: {counts[DONE]} done, {counts[FAILED]} failed, "
        f"{len(scores)} scored",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_report(args) -> int:
    scores = scores_from_csv(_read_text(args.scores))
    if not scores:
        raise ValidationError(f"scores CSV {args.scores} has no rows")
    reports, overall = aggregate(scores)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domains.csv").write_text(reports_to_csv(reports, overall), encoding="utf-8")
    (out / "distributions.csv").write_text(distributions_to_csv(scores), encoding="utf-8")
    (out / "histograms.csv").write_text(
        histograms_to_csv(scores, bin_width=args.bin_width), encoding="utf-8"
    )
    print(
        f"{len(scores)} files, {len(reports)} domains: "
        f"median wer {overall.median_wer:.3f}, "
        f"median mislabel {overall.median_mislabel_rate:.3f}"
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from diarfuse.service import create_app

    file_config = parse_config_file(args.config) if args.config else PipelineConfig()
    artifacts = Path(args.artifacts)
    artifacts.mkdir(parents=True, exist_ok=True)
    store = JobStore(artifacts / "ledger.jsonl")
    runner = Runner(
        store,
        artifacts,
        object_store=ObjectStore.from_env(endpoint=file_config.s3_endpoint),
        parallelism=file_config.parallelism,
        llm_endpoint=args.llm_endpoint or file_config.llm_endpoint,
    )
    app = create_app(runner)
    runner.start()
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    finally:
        runner.stop()
    return EXIT_OK


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise NotFoundError(f"file not found: {path}") from None
    except IsADirectoryError:
        raise ValidationError(f"expected a file, got a directory: {path}") from None


def _read_text(path: str) -> str:
    data = _read(path)
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 at byte {exc.start}") from exc


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("DIARFUSE_LOG_LEVEL", "WARNING"),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, NotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DownstreamError as exc:
        print(f"downstream error: {exc}", file=sys.stderr)
        return EXIT_DOWNSTREAM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
