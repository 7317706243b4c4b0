"""Command-line front end: schedule generation and condition reports.

Two subcommands drive the whole pipeline. ``schedule`` places comments
on the timeline and writes the result as JSON, WebVTT, CSV, or all
three; ``eval`` writes per-condition CSVs plus a summary JSON. All
outputs are written atomically (temp file, then rename), so a failed
run leaves no partial files.

Exit codes: 0 success, 2 config or validation problem, 3 input parse
problem, 4 embedding-provider problem.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from .curation import resolve_config
from .errors import (
    ConfigError,
    ParseError,
    ProviderError,
    ValidationError,
)
from .export_eval import (
    eval_conditions,
    export_json,
    export_timeline_csv,
    export_webvtt,
    render_report,
)
from .ingest import (
    ShotTrack,
    VideoMeta,
    parse_comments,
    parse_shots,
    parse_subtitles,
)
from .pipeline import PipelineInputs, run_pipeline
from .textsim import LocalHashingProvider, RemoteProvider

REMOTE_URL_ENV = "COMVI_REMOTE_URL"

_SUBTITLE_FORMATS = {".srt": "srt", ".vtt": "webvtt", ".webvtt": "webvtt"}
_SCHEDULE_EXTENSIONS = {"json": "json", "vtt": "vtt", "csv": "csv"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comvi",
        description="Place video comments on the timeline they talk about.",
        epilog="Config precedence: command-line flags override config-file "
               "values, which override built-in defaults.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    inputs = common.add_argument_group("inputs")
    inputs.add_argument("--comments", required=True, metavar="PATH",
                        help="JSON array of comment records")
    inputs.add_argument("--subtitles", required=True, metavar="PATH",
                        help="subtitle file; dialect inferred from the "
                             ".srt / .vtt / .webvtt extension")
    inputs.add_argument("--duration", required=True, type=int,
                        metavar="SECONDS", help="video length in whole seconds")
    inputs.add_argument("--shots", metavar="PATH",
                        help="optional JSON array of shot caption records")
    tuning = common.add_argument_group("tuning")
    tuning.add_argument("--config", metavar="PATH",
                        help="JSON config file with pipeline field names")
    tuning.add_argument("--alpha", type=float, metavar="R",
                        help="reading speed in seconds per character")
    tuning.add_argument("--tau-max", type=float, metavar="R",
                        help="display duration cap in seconds")
    tuning.add_argument("--w-corr", type=float, metavar="R",
                        help="correlation weight in the score")
    tuning.add_argument("--w-likes", type=float, metavar="R",
                        help="normalized-likes weight in the score")
    tuning.add_argument("--n-concurrent", type=int, metavar="K",
                        help="max comments displayed at once")
    tuning.add_argument("--query", metavar="STR",
                        help="semantic filter; keeps comments similar to it")
    tuning.add_argument("--seed", type=int, metavar="N",
                        help="seed for randomized procedures")
    providers = common.add_argument_group("embedding provider")
    providers.add_argument("--provider", choices=("local", "remote"),
                           default="local",
                           help="similarity backend (default: local)")
    providers.add_argument("--remote-url", metavar="URL",
                           help="remote provider base URL; falls back to "
                                f"the {REMOTE_URL_ENV} environment variable")

    precedence = ("Config precedence: command-line flags override "
                  "config-file values, which override built-in defaults.")
    schedule = sub.add_parser(
        "schedule", parents=[common],
        help="compute a schedule and write it out",
        description="Compute the schedule and write it in the requested "
                    "format(s).",
        epilog=precedence)
    schedule.add_argument("--out", metavar="PATH",
                          help="output path (default schedule.<ext>); with "
                               "--format all, the stem for all three files")
    schedule.add_argument("--format", choices=("json", "vtt", "csv", "all"),
                          default="json", help="output format (default: json)")
    schedule.set_defaults(func=cmd_schedule)

    evaluate = sub.add_parser(
        "eval", parents=[common],
        help="compare scheduling conditions and write reports",
        description="Run the condition comparison and write per-condition "
                    "CSVs plus summary.json.",
        epilog=precedence)
    evaluate.add_argument("--report-dir", required=True, metavar="PATH",
                          help="directory that receives the report files")
    evaluate.set_defaults(func=cmd_eval)
    return parser


def _resolve_flags(args: argparse.Namespace) -> dict:
    return {
        "alpha_user": args.alpha,
        "tau_max": args.tau_max,
        "w_corr": args.w_corr,
        "w_likes": args.w_likes,
        "n_user": args.n_concurrent,
        "query": args.query,
        "seed": args.seed,
    }


def _load_config(args: argparse.Namespace):
    file_bytes = Path(args.config).read_bytes() if args.config else None
    return resolve_config(file_bytes, _resolve_flags(args))


def _subtitle_format(path: Path) -> str:
    try:
        return _SUBTITLE_FORMATS[path.suffix.lower()]
    except KeyError:
        raise ConfigError(
            f"cannot infer subtitle dialect from {path.name!r}; expected a "
            f".srt, .vtt, or .webvtt extension") from None


def _load_inputs(args: argparse.Namespace) -> PipelineInputs:
    if args.duration < 1:
        raise ConfigError("--duration must be >= 1")
    comments = parse_comments(Path(args.comments).read_bytes())
    subtitle_path = Path(args.subtitles)
    subtitles = parse_subtitles(subtitle_path.read_bytes(),
                                _subtitle_format(subtitle_path))
    if args.shots:
        shots = parse_shots(Path(args.shots).read_bytes())
    else:
        shots = ShotTrack(shots=())
    return PipelineInputs(
        comments=tuple(comments),
        subtitles=subtitles,
        shots=shots,
        meta=VideoMeta(duration_s=args.duration),
    )


def _make_provider(args: argparse.Namespace):
    if args.provider == "local":
        return LocalHashingProvider()
    url = args.remote_url or os.environ.get(REMOTE_URL_ENV)
    if not url:
        raise ConfigError(
            f"remote provider needs --remote-url or {REMOTE_URL_ENV}")
    return RemoteProvider(url)


def _write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def cmd_schedule(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    inputs = _load_inputs(args)
    provider = _make_provider(args)
    result = run_pipeline(inputs, cfg, provider)
    schedule = result.schedule

    renderers = {
        "json": lambda: export_json(schedule, result.working, args.duration),
        "vtt": lambda: export_webvtt(schedule, result.working),
        "csv": lambda: export_timeline_csv(schedule),
    }
    if args.format == "all":
        stem = args.out or "schedule"
        outputs = {Path(f"{stem}.{_SCHEDULE_EXTENSIONS[fmt]}"): render()
                   for fmt, render in renderers.items()}
    else:
        default = f"schedule.{_SCHEDULE_EXTENSIONS[args.format]}"
        outputs = {Path(args.out or default): renderers[args.format]()}
    for path, data in outputs.items():
        _write_atomic(path, data)

    mean_duration = (sum(e.duration_s for e in schedule.entries) / schedule.n
                     if schedule.n else 0.0)
    print(f"scheduled {schedule.n} comments, total score "
          f"{schedule.total_score:.6f}, mean duration {mean_duration:.2f} s")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    inputs = _load_inputs(args)
    provider = _make_provider(args)
    report = eval_conditions(inputs, cfg, provider)
    files = render_report(report)
    report_dir = Path(args.report_dir)
    for name, data in sorted(files.items()):
        _write_atomic(report_dir / name, data)
    present = ", ".join(c.name for c in report.conditions)
    print(f"wrote {len(files)} report files to {report_dir} "
          f"(conditions: {present})")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ProviderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
