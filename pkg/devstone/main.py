"""Command-line entry point: ``devstone run | sweep | verify | dump``.

Exit code 0 = success, 1 = failure (including any verification mismatch or a
run whose counters disagree with the analytic prediction).
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path

from devstone.config import PROFILES, load_sweep_config
from devstone.generator import build, dump_outline
from devstone.harness import run_benchmark, sweep, verify
from devstone.models import (
    DEFAULT_MEM_CAP_BYTES,
    DEFAULT_TIME_CAP_S,
    DEFAULT_TRIALS,
    BenchmarkSpec,
    Family,
    OutputFormat,
    RunConfig,
    RunStatus,
    TransitionCounters,
)
from devstone.report import STDOUT, emit, format_verification

log = logging.getLogger("devstone")

_FAILED = {RunStatus.COUNT_MISMATCH, RunStatus.SPAWN_FAILED, RunStatus.ERROR}


def _families(value: str) -> list[Family]:
    try:
        return [Family(v.strip()) for v in value.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_run_options(p: argparse.ArgumentParser, *, defaults: bool) -> None:
    """Flags shared by ``run`` and ``sweep``; for ``sweep`` they only override the file."""

    def default(value: object) -> object:
        return value if defaults else None

    p.add_argument("--delta-int", type=float, default=default(0.0))
    p.add_argument("--delta-ext", type=float, default=default(0.0))
    p.add_argument("--events", type=int, default=default(1))
    p.add_argument("--trials", type=int, default=default(DEFAULT_TRIALS))
    p.add_argument("--time-cap", type=float, default=default(DEFAULT_TIME_CAP_S))
    p.add_argument("--mem-cap", type=int, default=default(DEFAULT_MEM_CAP_BYTES))
    p.add_argument(
        "--isolate",
        action=argparse.BooleanOptionalAction,
        default=default(True),
        help="run each trial in its own child process",
    )
    p.add_argument("--format", type=OutputFormat, choices=list(OutputFormat), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="devstone", description="DEVStone PDEVS benchmark")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="benchmark one model")
    run.add_argument("--family", type=Family, choices=list(Family), required=True)
    run.add_argument("--width", type=int, required=True)
    run.add_argument("--depth", type=int, required=True)
    _add_run_options(run, defaults=True)
    run.add_argument("--out", default=STDOUT, help="output file, '-' for stdout")

    sw = sub.add_parser("sweep", help="benchmark a width x depth grid per family")
    sw.add_argument("--config", type=Path)
    sw.add_argument("--profile", choices=PROFILES)
    sw.add_argument("--out", type=Path, required=True)
    sw.add_argument("--parallel", type=int)
    _add_run_options(sw, defaults=False)

    ver = sub.add_parser("verify", help="check simulated counters against the equations")
    ver.add_argument("--max-width", type=int, default=10)
    ver.add_argument("--max-depth", type=int, default=10)
    ver.add_argument("--families", type=_families, default=list(Family))
    ver.add_argument("--events", type=int, default=1)

    dump = sub.add_parser("dump", help="print the topology outline of one model")
    dump.add_argument("--family", type=Family, choices=list(Family), required=True)
    dump.add_argument("--width", type=int, required=True)
    dump.add_argument("--depth", type=int, required=True)
    return parser


# ── Commands ────────────────────────────────────────────────────────────


async def _cmd_run(args: argparse.Namespace) -> int:
    spec = BenchmarkSpec(
        family=args.family,
        width=args.width,
        depth=args.depth,
        delta_int=args.delta_int,
        delta_ext=args.delta_ext,
        n_events=args.events,
    )
    cfg = RunConfig(
        spec=spec,
        trials=args.trials,
        time_cap=args.time_cap,
        mem_cap=args.mem_cap,
        isolate=args.isolate,
    )
    result = await run_benchmark(cfg)
    emit([result], args.format, args.out)
    log.info("%s: %s, mean %.6gs", spec.label, result.status.value, result.mean_wall_time)
    return 1 if result.status in _FAILED else 0


async def _cmd_sweep(args: argparse.Namespace) -> int:
    overrides = {
        "delta_int": args.delta_int,
        "delta_ext": args.delta_ext,
        "events": args.events,
        "trials": args.trials,
        "time_cap": args.time_cap,
        "mem_cap": args.mem_cap,
        "isolate": args.isolate,
        "parallel": args.parallel,
    }
    cfg = load_sweep_config(args.config, profile=args.profile, overrides=overrides)
    results = await sweep(cfg, args.out, args.format)
    failed = [r for r in results if r.status in _FAILED]
    log.info("Sweep done: %d cell(s), %d failed", len(results), len(failed))
    return 1 if failed else 0


def _cmd_verify(args: argparse.Namespace) -> int:
    report = verify(args.max_width, args.max_depth, args.families, n_events=args.events)
    sys.stdout.write(format_verification(report))
    return 0 if report.ok else 1


def _cmd_dump(args: argparse.Namespace) -> int:
    spec = BenchmarkSpec(family=args.family, width=args.width, depth=args.depth)
    for line in dump_outline(build(spec, TransitionCounters())):
        sys.stdout.write(line + "\n")
    return 0


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    match args.command:
        case "run":
            return asyncio.run(_cmd_run(args))
        case "sweep":
            return asyncio.run(_cmd_sweep(args))
        case "verify":
            return _cmd_verify(args)
        case "dump":
            return _cmd_dump(args)
    return 2


def main(argv: list[str] | None = None) -> None:
    try:
        code = run(argv)
    except Exception:
        log.exception("devstone failed")
        sys.exit(1)
    sys.exit(code)


if __name__ == "__main__":
    main()
