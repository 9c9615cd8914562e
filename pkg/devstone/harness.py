"""Benchmark harness: timed trials, child-process isolation, sweeps and verification.

Each isolated trial runs ``python -m devstone.worker`` in its own process. The
child builds the model, prints a ``built`` line, simulates, and prints a
``result`` line. The parent arms the wall-clock watchdog only once ``built``
arrives, so model construction never counts against the time cap, and it
samples the child's RSS with psutil to enforce the memory cap.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging
import resource
import signal
import sys
import time
from collections.abc import Callable, Sequence
from pathlib import Path
from statistics import fmean

import psutil

from devstone.analytics import homod_event_terms, predict
from devstone.core import CoupledModel, count_atomics
from devstone.errors import (
    ChildSpawnError,
    CountOverflowError,
    DevstoneError,
    HarnessError,
    SimulationTimeoutError,
    UnsupportedPlatformError,
)
from devstone.generator import build, injection_schedule
from devstone.models import (
    AnalyticPrediction,
    BenchmarkSpec,
    Family,
    OutputFormat,
    RunConfig,
    RunResult,
    RunStatus,
    SweepConfig,
    TransitionCounters,
    TrialOutcome,
    TrialRequest,
    VerificationCell,
    VerificationReport,
    WorkerMessage,
)
from devstone.report import ResultWriter, emit, sort_results
from devstone.simulator import initialize
from devstone.workload import calibrate

log = logging.getLogger(__name__)

SAMPLE_INTERVAL_S = 0.01
WATCHDOG_GRACE_S = 1.0
BUILD_TIMEOUT_S = 3600.0
FEASIBLE_HOMOD_LIMIT = 6
WORKER_MODULE = "devstone.worker"

Builder = Callable[[BenchmarkSpec, TransitionCounters], CoupledModel]


# ── Single trial ────────────────────────────────────────────────────────


def self_peak_rss() -> int:
    """Peak resident set size of the calling process, in bytes."""
    usage = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return usage if sys.platform == "darwin" else usage * 1024


def execute_trial(
    spec: BenchmarkSpec,
    time_cap: float,
    *,
    builder: Builder = build,
    on_built: Callable[[], None] | None = None,
) -> TrialOutcome:
    """Build, initialize and simulate ``spec`` in the calling process.

    Only ``run_to_quiescence`` is timed. Construction, initialization and the
    workload calibration happen before the clock starts.
    """
    counters = TransitionCounters()
    try:
        model = builder(spec, counters)
        ctx = initialize(model, injection_schedule(spec))
    except MemoryError:
        return TrialOutcome(status=RunStatus.BUILD_FAILED, detail="memory exhausted during build")
    if spec.delta_int > 0 or spec.delta_ext > 0:
        calibrate()

    if on_built is not None:
        on_built()

    start = time.monotonic()
    try:
        ctx.run_to_quiescence(deadline=start + time_cap)
    except SimulationTimeoutError:
        return TrialOutcome(status=RunStatus.TIME_EXCEEDED, wall_time=time_cap, counters=counters)
    except MemoryError:
        return TrialOutcome(
            status=RunStatus.MEM_EXCEEDED,
            wall_time=min(time.monotonic() - start, time_cap),
            counters=counters,
            detail="memory exhausted during simulation",
        )
    wall = time.monotonic() - start

    if wall > time_cap:
        return TrialOutcome(status=RunStatus.TIME_EXCEEDED, wall_time=time_cap, counters=counters)
    return TrialOutcome(
        status=RunStatus.OK, wall_time=wall, peak_memory=self_peak_rss(), counters=counters
    )


# ── Child processes ─────────────────────────────────────────────────────


class ChildHandle:
    """What the parent knows about one worker process while and after it runs."""

    def __init__(self, pid: int, mem_cap: int) -> None:
        self.pid = pid
        self.mem_cap = mem_cap
        self.built = False
        self.reported_peak: int | None = None
        self.sampled_peak = 0
        self.killed_for_memory = False
        self.killed_for_time = False
        self.returncode: int | None = None
        self.stderr = ""


def measure_peak_memory(handle: ChildHandle) -> int:
    """Peak memory of a finished child, never above its cap.

    Prefers the child's own ``ru_maxrss`` report and falls back to the parent's
    RSS samples.
    """
    if handle.killed_for_memory:
        return handle.mem_cap
    if handle.reported_peak:
        return min(handle.reported_peak, handle.mem_cap)
    if handle.sampled_peak:
        return min(handle.sampled_peak, handle.mem_cap)
    raise UnsupportedPlatformError(f"no peak memory available for pid {handle.pid}")


async def _sample_memory(handle: ChildHandle, proc: asyncio.subprocess.Process) -> None:
    try:
        ps = psutil.Process(proc.pid)
    except psutil.Error:
        return
    while proc.returncode is None:
        try:
            rss = ps.memory_info().rss
        except psutil.Error:
            return
        handle.sampled_peak = max(handle.sampled_peak, rss)
        if rss > handle.mem_cap:
            log.info("pid %d RSS %d B over cap %d B, killing", proc.pid, rss, handle.mem_cap)
            handle.killed_for_memory = True
            with contextlib.suppress(ProcessLookupError):
                proc.kill()
            return
        await asyncio.sleep(SAMPLE_INTERVAL_S)


async def _read_message(proc: asyncio.subprocess.Process) -> WorkerMessage | None:
    assert proc.stdout is not None
    line = await proc.stdout.readline()
    if not line:
        return None
    return WorkerMessage.model_validate_json(line)


async def run_child(
    request: TrialRequest, *, command: Sequence[str] | None = None
) -> tuple[TrialOutcome, ChildHandle]:
    """Run one trial in a fresh worker process and settle its outcome.

    ``command`` replaces the default ``python -m devstone.worker``; any program
    that speaks the same JSON-lines protocol on stdout will do.
    """
    argv = list(command) if command else [sys.executable, "-m", WORKER_MODULE]
    try:
        proc = await asyncio.create_subprocess_exec(
            *argv,
            stdin=asyncio.subprocess.PIPE,
            stdout=asyncio.subprocess.PIPE,
            stderr=asyncio.subprocess.PIPE,
        )
    except OSError as exc:
        raise ChildSpawnError(f"cannot start {argv[0]}: {exc}") from exc

    handle = ChildHandle(proc.pid, request.mem_cap)
    sampler = asyncio.create_task(_sample_memory(handle, proc))
    assert proc.stdin is not None and proc.stderr is not None
    stderr_task = asyncio.create_task(proc.stderr.read())

    outcome: TrialOutcome | None = None
    try:
        proc.stdin.write(request.model_dump_json().encode())
        await proc.stdin.drain()
        proc.stdin.close()

        message = await asyncio.wait_for(_read_message(proc), timeout=BUILD_TIMEOUT_S)
        if message is not None and message.event == "built":
            handle.built = True
            message = await asyncio.wait_for(
                _read_message(proc), timeout=request.time_cap + WATCHDOG_GRACE_S
            )
        if message is not None and message.event == "result":
            outcome = message.outcome
    except (TimeoutError, asyncio.TimeoutError):  # distinct classes on Python 3.10
        handle.killed_for_time = True
        with contextlib.suppress(ProcessLookupError):
            proc.kill()
    except (BrokenPipeError, ConnectionResetError):
        log.debug("pid %d closed its pipes early", proc.pid)
    finally:
        handle.returncode = await proc.wait()
        sampler.cancel()
        with contextlib.suppress(asyncio.CancelledError):
            await sampler
        handle.stderr = (await stderr_task).decode(errors="replace")

    return _settle(outcome, handle, request), handle


def _settle(outcome: TrialOutcome | None, handle: ChildHandle, request: TrialRequest) -> TrialOutcome:
    if handle.killed_for_memory:
        status = RunStatus.MEM_EXCEEDED if handle.built else RunStatus.BUILD_FAILED
        counters = outcome.counters if outcome else TransitionCounters()
        return TrialOutcome(
            status=status,
            wall_time=min(outcome.wall_time if outcome else 0.0, request.time_cap),
            peak_memory=request.mem_cap,
            counters=counters,
            detail="killed over memory cap",
        )

    if outcome is not None:
        if outcome.status is RunStatus.MEM_EXCEEDED:
            outcome.peak_memory = request.mem_cap
            return outcome
        handle.reported_peak = outcome.peak_memory
        outcome.peak_memory = measure_peak_memory(handle)
        outcome.wall_time = min(outcome.wall_time, request.time_cap)
        return outcome

    if handle.killed_for_time:
        if not handle.built:
            return TrialOutcome(status=RunStatus.BUILD_FAILED, detail="build timed out")
        return TrialOutcome(
            status=RunStatus.TIME_EXCEEDED,
            wall_time=request.time_cap,
            peak_memory=min(handle.sampled_peak, request.mem_cap),
            detail="killed by watchdog",
        )

    if "MemoryError" in handle.stderr or handle.returncode == -signal.SIGKILL:
        status = RunStatus.MEM_EXCEEDED if handle.built else RunStatus.BUILD_FAILED
        return TrialOutcome(status=status, peak_memory=request.mem_cap, detail="out of memory")

    tail = handle.stderr.strip().splitlines()[-1:] or ["no output"]
    raise HarnessError(f"worker pid {handle.pid} exited {handle.returncode}: {tail[0]}")


# ── Runs ────────────────────────────────────────────────────────────────


def _prediction(spec: BenchmarkSpec) -> AnalyticPrediction | None:
    try:
        return predict(spec)
    except CountOverflowError as exc:
        log.warning("%s: %s", spec.label, exc)
        return None


async def _run_trial(cfg: RunConfig, builder: Builder) -> TrialOutcome:
    if not cfg.isolate:
        return await asyncio.to_thread(execute_trial, cfg.spec, cfg.time_cap, builder=builder)
    request = TrialRequest(spec=cfg.spec, time_cap=cfg.time_cap, mem_cap=cfg.mem_cap)
    outcome, _ = await run_child(request)
    return outcome


async def run_benchmark(cfg: RunConfig, *, builder: Builder = build) -> RunResult:
    """Run ``cfg.trials`` trials of one model and summarise them.

    A custom ``builder`` only takes effect in-process; isolated workers always
    use the stock generator. Trials stop at the first truncated one.
    """
    predicted = _prediction(cfg.spec)
    outcomes: list[TrialOutcome] = []
    for trial in range(1, cfg.trials + 1):
        try:
            outcome = await _run_trial(cfg, builder)
        except ChildSpawnError as exc:
            log.error("%s: %s", cfg.spec.label, exc)
            return RunResult(
                spec=cfg.spec,
                trials=cfg.trials,
                predicted=predicted,
                status=RunStatus.SPAWN_FAILED,
                memory_reliable=False,
                detail=str(exc),
            )
        outcomes.append(outcome)
        log.info(
            "%s trial %d/%d: %s in %.4fs",
            cfg.spec.label,
            trial,
            cfg.trials,
            outcome.status.value,
            outcome.wall_time,
        )
        if outcome.status is not RunStatus.OK:
            break
    return summarise(cfg, outcomes, predicted)


def summarise(
    cfg: RunConfig, outcomes: list[TrialOutcome], predicted: AnalyticPrediction | None
) -> RunResult:
    ok = [o for o in outcomes if o.status is RunStatus.OK]
    failed = [o for o in outcomes if o.status is not RunStatus.OK]
    status = failed[0].status if failed else RunStatus.OK
    basis = ok or outcomes

    observed = (ok or outcomes)[0].counters if outcomes else TransitionCounters()
    if status is RunStatus.OK and predicted is not None and not predicted.matches(observed):
        status = RunStatus.COUNT_MISMATCH
        log.error(
            "%s: observed %s, predicted %s",
            cfg.spec.label,
            observed.as_tuple(),
            predicted.counter_tuple(),
        )

    mean_wall = fmean(o.wall_time for o in basis) if basis else 0.0
    mean_peak = fmean(o.peak_memory for o in basis) if basis else 0.0
    if status is RunStatus.TIME_EXCEEDED:
        mean_wall = cfg.time_cap
    elif status is RunStatus.MEM_EXCEEDED:
        mean_peak = float(cfg.mem_cap)

    return RunResult(
        spec=cfg.spec,
        trials=cfg.trials,
        wall_times=[o.wall_time for o in outcomes],
        peak_memories=[o.peak_memory for o in outcomes],
        mean_wall_time=min(mean_wall, cfg.time_cap),
        mean_peak_memory=min(mean_peak, float(cfg.mem_cap)),
        observed=observed,
        predicted=predicted,
        status=status,
        memory_reliable=cfg.isolate,
        detail="; ".join(o.detail for o in failed if o.detail),
    )


# ── Sweeps ──────────────────────────────────────────────────────────────


async def sweep(
    cfg: SweepConfig,
    out_path: Path | None = None,
    fmt: OutputFormat = OutputFormat.CSV,
    *,
    builder: Builder = build,
) -> list[RunResult]:
    """Run every cell of ``cfg``; each finished cell is flushed to ``out_path`` at once.

    A failing cell is recorded with its status and the sweep moves on.
    """
    run_cfgs = [rc for family in cfg.families for rc in family.run_configs()]
    total = len(run_cfgs)
    writer = ResultWriter(out_path, fmt) if out_path is not None else None
    semaphore = asyncio.Semaphore(cfg.parallel)
    results: list[RunResult] = []
    done = 0

    async def _cell(rc: RunConfig) -> RunResult:
        nonlocal done
        async with semaphore:
            try:
                result = await run_benchmark(rc, builder=builder)
            except Exception as exc:
                log.exception("%s failed", rc.spec.label)
                result = RunResult(
                    spec=rc.spec,
                    trials=rc.trials,
                    predicted=_prediction(rc.spec),
                    status=RunStatus.ERROR,
                    memory_reliable=rc.isolate,
                    detail=str(exc),
                )
            done += 1
            log.info("[%d/%d] %s %s", done, total, rc.spec.label, result.status.value)
            results.append(result)
            if writer is not None:
                writer.append(result)
            return result

    log.info("Sweep of %d cell(s), %d at a time", total, cfg.parallel)
    gathered = await asyncio.gather(*(_cell(rc) for rc in run_cfgs), return_exceptions=True)
    for rc, item in zip(run_cfgs, gathered, strict=True):
        if isinstance(item, BaseException):
            log.error("%s crashed: %r", rc.spec.label, item)

    ordered = sort_results(results)
    if out_path is not None and ordered:
        emit(ordered, fmt, out_path)
    return ordered


# ── Verification ────────────────────────────────────────────────────────


def _verify_cell(spec: BenchmarkSpec, builder: Builder) -> VerificationCell:
    counters = TransitionCounters()
    try:
        model = builder(spec, counters)
        n_atomics = count_atomics(model)
        initialize(model, injection_schedule(spec)).run_to_quiescence()
    except DevstoneError as exc:
        return VerificationCell(
            spec=spec, observed=counters, predicted=None, mismatches=[f"simulation error: {exc}"]
        )

    predicted = _prediction(spec)
    cell = VerificationCell(
        spec=spec, observed=counters, predicted=predicted, n_atomics=n_atomics
    )
    if predicted is None:
        cell.mismatches.append("prediction overflows the count range")
        return cell

    pairs = [
        ("n_atomics", n_atomics, predicted.n_atomics),
        ("n_delta_int", counters.num_delt_ints, predicted.n_delta_int),
        ("n_delta_ext", counters.num_delt_exts, predicted.n_delta_ext),
        ("n_events", counters.num_of_events, predicted.n_events),
    ]
    for name, seen, expected in pairs:
        if seen != expected:
            cell.mismatches.append(f"{name}: observed {seen}, predicted {expected}")

    if cell.mismatches and spec.family is Family.HOMOD:
        cell.decomposition = [
            f"l={level} c={c} term={term}"
            for level, c, term in homod_event_terms(spec.width, spec.depth)
        ]
    return cell


def verify(
    max_width: int = 10,
    max_depth: int = 10,
    families: list[Family] | None = None,
    *,
    n_events: int = 1,
    builder: Builder = build,
) -> VerificationReport:
    """Simulate every (w, d) with 2 <= w <= max_width, 1 <= d <= max_depth and compare.

    HOmod and HOmem grow exponentially and are clamped to
    ``FEASIBLE_HOMOD_LIMIT`` in both dimensions.
    """
    report = VerificationReport()
    for family in families or list(Family):
        w_max, d_max = max_width, max_depth
        if family in (Family.HOMOD, Family.HOMEM):
            w_max = min(w_max, FEASIBLE_HOMOD_LIMIT)
            d_max = min(d_max, FEASIBLE_HOMOD_LIMIT)
            if (w_max, d_max) != (max_width, max_depth):
                log.warning(
                    "%s verification clamped to %dx%d", family.value, w_max, d_max
                )
        for w in range(2, w_max + 1):
            for d in range(1, d_max + 1):
                spec = BenchmarkSpec(family=family, width=w, depth=d, n_events=n_events)
                cell = _verify_cell(spec, builder)
                if cell.mismatches:
                    log.error("%s: %s", spec.label, "; ".join(cell.mismatches))
                report.cells.append(cell)
    log.info(
        "Verified %d cell(s), %d mismatch(es)", len(report.cells), len(report.mismatched)
    )
    return report
