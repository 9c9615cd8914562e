"""Tests for domain model validation."""

from __future__ import annotations

import math

import pytest
from pydantic import ValidationError

from devstone.models import (
    BenchmarkSpec,
    Family,
    FamilySweep,
    Injection,
    InjectionSchedule,
    Range,
    RunStatus,
    SweepConfig,
)


class TestBenchmarkSpec:
    @pytest.mark.parametrize(
        "fields",
        [
            {"width": 1, "depth": 1},
            {"width": 2, "depth": 0},
            {"width": 2, "depth": 1, "delta_int": -0.1},
            {"width": 2, "depth": 1, "n_events": 0},
        ],
    )
    def test_rejects_out_of_range(self, fields):
        with pytest.raises(ValidationError):
            BenchmarkSpec(family=Family.LI, **fields)

    def test_label(self):
        assert BenchmarkSpec(family=Family.HOMOD, width=3, depth=2).label == "HOmod(3,2)"

    def test_family_order(self):
        assert [f.order for f in Family] == [0, 1, 2, 3, 4]


class TestInjectionSchedule:
    def test_same_instant_distinct_ports(self):
        schedule = InjectionSchedule(
            events=[
                Injection(time=0, port="in1", payload=0),
                Injection(time=0, port="in2", payload=0),
                Injection(time=1, port="in1", payload=1),
            ]
        )
        assert schedule.instants == [0.0, 1.0]

    def test_decreasing_time(self):
        with pytest.raises(ValidationError):
            InjectionSchedule(
                events=[
                    Injection(time=1, port="in", payload=0),
                    Injection(time=0.5, port="in", payload=1),
                ]
            )

    def test_same_port_twice_in_one_instant(self):
        with pytest.raises(ValidationError):
            InjectionSchedule(
                events=[
                    Injection(time=0, port="in", payload=0),
                    Injection(time=0, port="in", payload=1),
                ]
            )

    def test_infinite_time(self):
        with pytest.raises(ValidationError):
            Injection(time=math.inf, port="in", payload=0)


class TestSweepModels:
    def test_range_values(self):
        assert Range(min=2, step=100, max=1502).values()[-1] == 1502
        assert len(Range(min=1, step=100, max=1501).values()) == 16

    def test_range_bounds(self):
        with pytest.raises(ValidationError):
            Range(min=5, max=4)

    def test_run_configs(self):
        sweep = FamilySweep(
            family=Family.HI,
            width=Range(min=2, max=3),
            depth=Range(min=1, max=2),
            delta_ext=0.5,
        )
        specs = [rc.spec for rc in sweep.run_configs()]
        assert [(s.width, s.depth) for s in specs] == [(2, 1), (2, 2), (3, 1), (3, 2)]
        assert all(s.delta_ext == 0.5 for s in specs)

    def test_parallel_requires_isolation(self):
        family = FamilySweep(
            family=Family.LI, width=Range(min=2, max=2), depth=Range(min=1, max=1), isolate=False
        )
        with pytest.raises(ValidationError):
            SweepConfig(families=[family], parallel=2)

    def test_truncated_statuses(self):
        assert {s for s in RunStatus if s.truncated} == {
            RunStatus.TIME_EXCEEDED,
            RunStatus.MEM_EXCEEDED,
        }
