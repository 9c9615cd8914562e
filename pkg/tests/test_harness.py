"""Tests for trials, caps, child processes, sweeps and verification."""

from __future__ import annotations

import csv
import sys
import textwrap
import time

import pytest

from devstone import harness
from devstone.errors import ChildSpawnError, HarnessError, UnsupportedPlatformError
from devstone.generator import build
from devstone.harness import (
    ChildHandle,
    execute_trial,
    measure_peak_memory,
    run_benchmark,
    run_child,
    sweep,
    verify,
)
from devstone.models import (
    DEFAULT_MEM_CAP_BYTES,
    BenchmarkSpec,
    Family,
    FamilySweep,
    OutputFormat,
    Range,
    RunConfig,
    RunStatus,
    SweepConfig,
    TrialRequest,
)
from devstone.report import CSV_COLUMNS

MIB = 1 << 20


def _cfg(family: Family, w: int, d: int, **kwargs) -> RunConfig:
    spec_fields = {k: kwargs.pop(k) for k in ("delta_int", "delta_ext", "n_events") if k in kwargs}
    spec = BenchmarkSpec(family=family, width=w, depth=d, **spec_fields)
    return RunConfig(spec=spec, **kwargs)


def drop_first_eic(spec, counters):
    model = build(spec, counters)
    first = model.eic[0]
    model.remove_coupling(first.src, first.dst)
    return model


class TestExecuteTrial:
    def test_li_4_3(self):
        outcome = execute_trial(BenchmarkSpec(family=Family.LI, width=4, depth=3), 10.0)
        assert outcome.status is RunStatus.OK
        assert outcome.counters.as_tuple() == (7, 7, 7)
        assert outcome.peak_memory > 0

    def test_build_time_is_not_measured(self):
        def slow_builder(spec, counters):
            time.sleep(0.5)
            return build(spec, counters)

        outcome = execute_trial(
            BenchmarkSpec(family=Family.LI, width=4, depth=3), 10.0, builder=slow_builder
        )
        assert outcome.wall_time < 0.25

    def test_on_built_fires_before_timing(self):
        events = []
        execute_trial(
            BenchmarkSpec(family=Family.LI, width=2, depth=1),
            10.0,
            on_built=lambda: events.append(time.monotonic()),
        )
        assert len(events) == 1


class TestPeakMemory:
    def test_prefers_reported_peak(self):
        handle = ChildHandle(1, mem_cap=100)
        handle.reported_peak = 40
        handle.sampled_peak = 60
        assert measure_peak_memory(handle) == 40

    def test_falls_back_to_samples(self):
        handle = ChildHandle(1, mem_cap=100)
        handle.sampled_peak = 60
        assert measure_peak_memory(handle) == 60

    def test_never_above_cap(self):
        handle = ChildHandle(1, mem_cap=100)
        handle.reported_peak = 500
        assert measure_peak_memory(handle) == 100
        handle.killed_for_memory = True
        assert measure_peak_memory(handle) == 100

    def test_nothing_known(self):
        with pytest.raises(UnsupportedPlatformError):
            measure_peak_memory(ChildHandle(1, mem_cap=100))

    async def test_hundred_mib_child(self):
        script = textwrap.dedent(
            """
            import json, resource, sys, time
            sys.stdin.read()
            print(json.dumps({"event": "built"}), flush=True)
            block = b"x" * (100 * 2**20)
            time.sleep(0.2)
            peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
            peak = peak if sys.platform == "darwin" else peak * 1024
            outcome = {"status": "ok", "wall_time": 0.2, "peak_memory": peak}
            print(json.dumps({"event": "result", "outcome": outcome}), flush=True)
            """
        )
        request = TrialRequest(
            spec=BenchmarkSpec(family=Family.LI, width=2, depth=1),
            time_cap=30.0,
            mem_cap=1 << 30,
        )
        outcome, handle = await run_child(request, command=[sys.executable, "-c", script])
        assert outcome.status is RunStatus.OK
        assert 100 * MIB <= outcome.peak_memory <= 130 * MIB
        assert handle.sampled_peak <= 130 * MIB


class TestChildOutcomes:
    @staticmethod
    def _request(time_cap: float = 30.0, mem_cap: int = 1 << 30) -> TrialRequest:
        return TrialRequest(
            spec=BenchmarkSpec(family=Family.LI, width=2, depth=1),
            time_cap=time_cap,
            mem_cap=mem_cap,
        )

    @staticmethod
    def _hog(announce_built: bool) -> list[str]:
        built = 'print(json.dumps({"event": "built"}), flush=True)' if announce_built else ""
        script = textwrap.dedent(
            """
            import json, sys, time
            sys.stdin.read()
            BUILT
            blocks = []
            for _ in range(256):
                blocks.append(b"x" * (16 * 2**20))
                time.sleep(0.01)
            time.sleep(30)
            """
        ).replace("BUILT", built)
        return [sys.executable, "-c", script]

    async def test_memory_kill_after_build(self):
        request = self._request(mem_cap=200 * MIB)
        outcome, handle = await run_child(request, command=self._hog(announce_built=True))
        assert handle.killed_for_memory
        assert outcome.status is RunStatus.MEM_EXCEEDED
        assert outcome.peak_memory == 200 * MIB

    async def test_memory_kill_during_build(self):
        request = self._request(mem_cap=200 * MIB)
        outcome, handle = await run_child(request, command=self._hog(announce_built=False))
        assert handle.killed_for_memory
        assert not handle.built
        assert outcome.status is RunStatus.BUILD_FAILED

    async def test_watchdog_kill(self):
        script = textwrap.dedent(
            """
            import json, sys, time
            sys.stdin.read()
            print(json.dumps({"event": "built"}), flush=True)
            time.sleep(30)
            """
        )
        outcome, handle = await run_child(
            self._request(time_cap=0.5), command=[sys.executable, "-c", script]
        )
        assert handle.killed_for_time
        assert outcome.status is RunStatus.TIME_EXCEEDED
        assert outcome.wall_time == 0.5

    async def test_crashed_worker_raises(self):
        script = "import sys; sys.stdin.read(); sys.stderr.write('worker exploded\\n'); sys.exit(3)"
        with pytest.raises(HarnessError, match="exited 3: worker exploded"):
            await run_child(self._request(), command=[sys.executable, "-c", script])


class TestRunBenchmark:
    async def test_in_process(self):
        result = await run_benchmark(_cfg(Family.LI, 4, 3, trials=2, isolate=False))
        assert result.status is RunStatus.OK
        assert result.observed.as_tuple() == (7, 7, 7)
        assert len(result.wall_times) == 2
        assert result.memory_reliable is False

    async def test_isolated(self):
        result = await run_benchmark(_cfg(Family.LI, 4, 3, trials=2))
        assert result.status is RunStatus.OK
        assert result.observed.as_tuple() == (7, 7, 7)
        assert result.memory_reliable is True
        assert 0 < result.mean_peak_memory <= DEFAULT_MEM_CAP_BYTES

    async def test_five_events(self):
        result = await run_benchmark(_cfg(Family.LI, 4, 3, n_events=5, trials=1, isolate=False))
        assert result.status is RunStatus.OK
        assert result.observed.as_tuple() == (35, 35, 35)
        assert result.predicted.counter_tuple() == (35, 35, 35)

    async def test_external_delay_is_timed(self):
        result = await run_benchmark(
            _cfg(Family.LI, 2, 1, delta_ext=0.05, trials=1, isolate=False)
        )
        assert result.status is RunStatus.OK
        assert result.observed.as_tuple() == (1, 1, 1)
        assert 0.045 <= result.mean_wall_time <= 0.10

    async def test_miswired_builder_is_a_count_mismatch(self):
        result = await run_benchmark(
            _cfg(Family.LI, 4, 3, trials=1, isolate=False), builder=drop_first_eic
        )
        assert result.status is RunStatus.COUNT_MISMATCH

    async def test_time_cap_truncates_exactly(self):
        cfg = _cfg(Family.HOMEM, 6, 6, delta_ext=0.05, trials=3, time_cap=1.0)
        result = await run_benchmark(cfg)
        assert result.status is RunStatus.TIME_EXCEEDED
        assert result.mean_wall_time == 1.0
        assert result.wall_times == [1.0]

    async def test_tiny_caps(self):
        cfg = _cfg(Family.HOMEM, 10, 10, trials=1, time_cap=5.0, mem_cap=512 * MIB)
        result = await run_benchmark(cfg)
        assert result.status in (RunStatus.MEM_EXCEEDED, RunStatus.TIME_EXCEEDED)
        assert result.mean_wall_time <= 5.0
        assert result.mean_peak_memory <= 512 * MIB

    async def test_spawn_failure(self, monkeypatch):
        async def no_child(request, *, command=None):
            raise ChildSpawnError("no python")

        monkeypatch.setattr(harness, "run_child", no_child)
        result = await run_benchmark(_cfg(Family.LI, 2, 1, trials=1))
        assert result.status is RunStatus.SPAWN_FAILED
        assert "no python" in result.detail

    async def test_missing_executable(self):
        request = TrialRequest(
            spec=BenchmarkSpec(family=Family.LI, width=2, depth=1), time_cap=1.0, mem_cap=MIB
        )
        with pytest.raises(ChildSpawnError):
            await run_child(request, command=["/nonexistent/devstone-worker"])

    async def test_li_502_501(self):
        result = await run_benchmark(_cfg(Family.LI, 502, 501, trials=1, isolate=False))
        assert result.status is RunStatus.OK
        assert result.observed.as_tuple() == (250_501, 250_501, 250_501)


class TestSweep:
    async def test_cell_count_and_flush(self, tmp_path):
        cfg = SweepConfig(
            families=[
                FamilySweep(
                    family=Family.LI,
                    width=Range(min=2, step=100, max=302),
                    depth=Range(min=1, step=100, max=301),
                    trials=1,
                    isolate=False,
                )
            ]
        )
        assert cfg.cell_count == 16
        out = tmp_path / "li.csv"
        results = await sweep(cfg, out, OutputFormat.CSV)
        assert len(results) == 16
        assert all(r.status is RunStatus.OK for r in results)

        rows = list(csv.DictReader(out.open()))
        assert list(rows[0]) == CSV_COLUMNS
        assert [(int(r["width"]), int(r["depth"])) for r in rows] == [
            (w, d) for w in (2, 102, 202, 302) for d in (1, 101, 201, 301)
        ]

    async def test_rows_are_flushed_as_cells_finish(self, tmp_path, monkeypatch):
        out = tmp_path / "partial.csv"
        seen: list[int] = []
        real = harness.run_benchmark

        async def spying(cfg, *, builder=build):
            seen.append(len(out.read_text().splitlines()))
            return await real(cfg, builder=builder)

        monkeypatch.setattr(harness, "run_benchmark", spying)
        cfg = SweepConfig(
            families=[
                FamilySweep(
                    family=Family.HI,
                    width=Range(min=2, max=4),
                    depth=Range(min=1, max=1),
                    trials=1,
                    isolate=False,
                )
            ]
        )
        await sweep(cfg, out, OutputFormat.CSV)
        assert seen == [1, 2, 3]
        assert len(out.read_text().splitlines()) == 4

    async def test_crashing_cell_is_recorded(self, tmp_path):
        def flaky(spec, counters):
            if spec.width == 3:
                raise RuntimeError("builder blew up")
            return build(spec, counters)

        cfg = SweepConfig(
            families=[
                FamilySweep(
                    family=Family.LI,
                    width=Range(min=2, max=4),
                    depth=Range(min=1, max=1),
                    trials=1,
                    isolate=False,
                )
            ]
        )
        out = tmp_path / "flaky.csv"
        results = await sweep(cfg, out, OutputFormat.CSV, builder=flaky)

        assert [r.status for r in results] == [RunStatus.OK, RunStatus.ERROR, RunStatus.OK]
        assert results[1].detail == "builder blew up"
        rows = list(csv.DictReader(out.open()))
        assert [(r["width"], r["status"]) for r in rows] == [
            ("2", "ok"),
            ("3", "error"),
            ("4", "ok"),
        ]

    async def test_parallel_isolated(self):
        cfg = SweepConfig(
            families=[
                FamilySweep(
                    family=Family.HO,
                    width=Range(min=2, max=3),
                    depth=Range(min=1, max=2),
                    trials=1,
                )
            ],
            parallel=2,
        )
        results = await sweep(cfg)
        assert [(r.spec.width, r.spec.depth) for r in results] == [(2, 1), (2, 2), (3, 1), (3, 2)]
        assert all(r.status is RunStatus.OK for r in results)


class TestVerify:
    def test_full_default_grid(self):
        report = verify()
        assert report.ok, [c.mismatches for c in report.mismatched]
        per_family = {f: sum(c.spec.family is f for c in report.cells) for f in Family}
        assert per_family[Family.LI] == 9 * 10
        assert per_family[Family.HOMOD] == 5 * 6

    def test_miswired_li_fails_everywhere(self):
        report = verify(4, 4, [Family.LI], builder=drop_first_eic)
        assert len(report.cells) == 12
        assert len(report.mismatched) == 12

    def test_homod_mismatch_shows_terms(self):
        report = verify(3, 2, [Family.HOMOD], builder=drop_first_eic)
        cell = report.cells[-1]
        assert cell.mismatches
        assert cell.decomposition[0] == "l=1 c=1 term=4"

    def test_events_scale(self):
        assert verify(3, 3, [Family.HI, Family.HOMEM], n_events=2).ok
