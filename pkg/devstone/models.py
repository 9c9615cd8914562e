"""Domain models for the DEVS kernel, the DEVStone generators and the benchmark harness."""

from __future__ import annotations

import math
import sys
from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:

    class StrEnum(str, Enum):
        """Backport of :class:`enum.StrEnum` (Python 3.11+)."""

        __str__ = str.__str__
        __format__ = str.__format__

GIB = 1 << 30

DEFAULT_TRIALS = 10
DEFAULT_TIME_CAP_S = 1200.0
DEFAULT_MEM_CAP_BYTES = 4 * GIB


class Family(StrEnum):
    LI = "LI"
    HI = "HI"
    HO = "HO"
    HOMOD = "HOmod"
    HOMEM = "HOmem"

    @property
    def order(self) -> int:
        return list(Family).index(self)


class Direction(StrEnum):
    INPUT = "input"
    OUTPUT = "output"


class CouplingClass(StrEnum):
    EIC = "EIC"
    EOC = "EOC"
    IC = "IC"


class Phase(StrEnum):
    PASSIVE = "passive"
    ACTIVE = "active"


class RunStatus(StrEnum):
    OK = "ok"
    TIME_EXCEEDED = "time_exceeded"
    MEM_EXCEEDED = "mem_exceeded"
    BUILD_FAILED = "build_failed"
    COUNT_MISMATCH = "count_mismatch"
    SPAWN_FAILED = "spawn_failed"
    ERROR = "error"

    @property
    def truncated(self) -> bool:
        return self in (RunStatus.TIME_EXCEEDED, RunStatus.MEM_EXCEEDED)


class OutputFormat(StrEnum):
    CSV = "csv"
    JSON = "json"


# ── Benchmark description ───────────────────────────────────────────────


class BenchmarkSpec(BaseModel):
    """One DEVStone model instance plus the number of injected events."""

    model_config = ConfigDict(frozen=True)

    family: Family
    width: int = Field(ge=2)
    depth: int = Field(ge=1)
    delta_int: float = Field(default=0.0, ge=0.0)
    delta_ext: float = Field(default=0.0, ge=0.0)
    n_events: int = Field(default=1, ge=1)

    @property
    def label(self) -> str:
        return f"{self.family.value}({self.width},{self.depth})"


class TransitionCounters(BaseModel):
    """Per-simulation tally shared by every instrumented atomic model."""

    num_delt_ints: int = 0
    num_delt_exts: int = 0
    num_of_events: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return self.num_delt_ints, self.num_delt_exts, self.num_of_events


class AnalyticPrediction(BaseModel):
    n_atomics: int = Field(ge=0)
    n_delta_int: int = Field(ge=0)
    n_delta_ext: int = Field(ge=0)
    n_events: int = Field(ge=0)

    def counter_tuple(self) -> tuple[int, int, int]:
        return self.n_delta_int, self.n_delta_ext, self.n_events

    def matches(self, counters: TransitionCounters) -> bool:
        return self.counter_tuple() == counters.as_tuple()


# ── Model validation ────────────────────────────────────────────────────


class Violation(BaseModel):
    kind: str  # dangling_endpoint, direction, self_coupling, duplicate_name, classification
    path: str
    message: str


class ValidationReport(BaseModel):
    violations: list[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


# ── Simulation inputs and state ─────────────────────────────────────────


class Injection(BaseModel):
    model_config = ConfigDict(frozen=True)

    time: float = Field(ge=0.0)
    port: str
    payload: int

    @field_validator("time")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("injection time must be finite")
        return value


class InjectionSchedule(BaseModel):
    """Root-boundary events, grouped into instants separated by more than 0 seconds.

    Triples sharing a time form one instant and must name distinct ports.
    """

    events: list[Injection] = Field(default_factory=list)

    @model_validator(mode="after")
    def _ordered(self) -> InjectionSchedule:
        seen: set[str] = set()
        last = -math.inf
        for inj in self.events:
            if inj.time < last:
                raise ValueError(f"injection times must increase (got {inj.time} after {last})")
            if inj.time > last:
                seen = set()
                last = inj.time
            if inj.port in seen:
                raise ValueError(f"port {inj.port!r} injected twice at t={inj.time}")
            seen.add(inj.port)
        return self

    @property
    def instants(self) -> list[float]:
        return sorted({inj.time for inj in self.events})


class DevstoneState(BaseModel):
    events: list[int] = Field(default_factory=list)
    phase: Phase = Phase.PASSIVE
    sigma: float = math.inf


# ── Harness configuration and results ───────────────────────────────────


class RunConfig(BaseModel):
    spec: BenchmarkSpec
    trials: int = Field(default=DEFAULT_TRIALS, ge=1)
    time_cap: float = Field(default=DEFAULT_TIME_CAP_S, gt=0.0)
    mem_cap: int = Field(default=DEFAULT_MEM_CAP_BYTES, gt=0)
    isolate: bool = True


class Range(BaseModel):
    min: int
    step: int = Field(default=1, ge=1)
    max: int

    @model_validator(mode="after")
    def _bounds(self) -> Range:
        if self.max < self.min:
            raise ValueError(f"range max {self.max} is below min {self.min}")
        return self

    def values(self) -> list[int]:
        return list(range(self.min, self.max + 1, self.step))


class FamilySweep(BaseModel):
    """Width x depth grid for one family plus the run settings shared by its cells."""

    family: Family
    width: Range
    depth: Range
    trials: int = Field(default=DEFAULT_TRIALS, ge=1)
    time_cap: float = Field(default=DEFAULT_TIME_CAP_S, gt=0.0)
    mem_cap: int = Field(default=DEFAULT_MEM_CAP_BYTES, gt=0)
    delta_int: float = Field(default=0.0, ge=0.0)
    delta_ext: float = Field(default=0.0, ge=0.0)
    n_events: int = Field(default=1, ge=1)
    isolate: bool = True

    @model_validator(mode="after")
    def _family_minimums(self) -> FamilySweep:
        if self.width.min < 2:
            raise ValueError(f"{self.family.value}: width min must be >= 2")
        if self.depth.min < 1:
            raise ValueError(f"{self.family.value}: depth min must be >= 1")
        return self

    def run_configs(self) -> list[RunConfig]:
        return [
            RunConfig(
                spec=BenchmarkSpec(
                    family=self.family,
                    width=w,
                    depth=d,
                    delta_int=self.delta_int,
                    delta_ext=self.delta_ext,
                    n_events=self.n_events,
                ),
                trials=self.trials,
                time_cap=self.time_cap,
                mem_cap=self.mem_cap,
                isolate=self.isolate,
            )
            for w in self.width.values()
            for d in self.depth.values()
        ]


class SweepConfig(BaseModel):
    families: list[FamilySweep]
    parallel: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _parallel_needs_isolation(self) -> SweepConfig:
        if self.parallel > 1 and not all(f.isolate for f in self.families):
            raise ValueError("parallel cells require isolate = true for every family")
        return self

    @property
    def cell_count(self) -> int:
        return sum(len(f.width.values()) * len(f.depth.values()) for f in self.families)


class TrialOutcome(BaseModel):
    """What one trial reports back, whether it ran in-process or in a child."""

    status: RunStatus
    wall_time: float = 0.0
    peak_memory: int = 0
    counters: TransitionCounters = Field(default_factory=TransitionCounters)
    detail: str = ""


class RunResult(BaseModel):
    spec: BenchmarkSpec
    trials: int
    wall_times: list[float] = Field(default_factory=list)
    peak_memories: list[int] = Field(default_factory=list)
    mean_wall_time: float = 0.0
    mean_peak_memory: float = 0.0
    observed: TransitionCounters = Field(default_factory=TransitionCounters)
    predicted: AnalyticPrediction | None = None
    status: RunStatus = RunStatus.OK
    memory_reliable: bool = True
    detail: str = ""


class VerificationCell(BaseModel):
    spec: BenchmarkSpec
    observed: TransitionCounters
    predicted: AnalyticPrediction | None
    n_atomics: int = 0
    mismatches: list[str] = Field(default_factory=list)
    decomposition: list[str] = Field(default_factory=list)


class VerificationReport(BaseModel):
    cells: list[VerificationCell] = Field(default_factory=list)

    @property
    def mismatched(self) -> list[VerificationCell]:
        return [c for c in self.cells if c.mismatches]

    @property
    def ok(self) -> bool:
        return not self.mismatched


# ── Child-process protocol ──────────────────────────────────────────────


class TrialRequest(BaseModel):
    spec: BenchmarkSpec
    time_cap: float = Field(gt=0.0)
    mem_cap: int = Field(gt=0)


class WorkerMessage(BaseModel):
    """One JSON line on the worker's stdout: ``built`` once, then ``result``."""

    event: Literal["built", "result"]
    outcome: TrialOutcome | None = None
