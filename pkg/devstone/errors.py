"""Exception hierarchy for the DEVS kernel, the DEVStone generators and the harness."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from devstone.models import ValidationReport


class DevstoneError(Exception):
    """Base class for every error raised by this package."""


# ── Model algebra ───────────────────────────────────────────────────────


class ModelError(DevstoneError):
    pass


class DuplicateNameError(ModelError):
    pass


class CouplingError(ModelError):
    pass


class SelfCouplingError(CouplingError):
    pass


class CouplingDirectionError(CouplingError):
    pass


class DanglingEndpointError(CouplingError):
    pass


class ModelValidationError(ModelError):
    """Raised when a model that must be well-formed is not."""

    def __init__(self, report: ValidationReport) -> None:
        self.report = report
        first = report.violations[0].message if report.violations else "unknown"
        super().__init__(f"{len(report.violations)} violation(s), first: {first}")


# ── Simulation ──────────────────────────────────────────────────────────


class SimulationError(DevstoneError):
    pass


class ScheduleError(SimulationError):
    pass


class RoutingLoopError(SimulationError):
    pass


class StepLimitExceededError(SimulationError):
    pass


class SimulationTimeoutError(SimulationError):
    pass


class InvalidTimeAdvanceError(SimulationError):
    pass


# ── Analytics ───────────────────────────────────────────────────────────


class CountOverflowError(DevstoneError):
    pass


# ── Harness ─────────────────────────────────────────────────────────────


class HarnessError(DevstoneError):
    pass


class ChildSpawnError(HarnessError):
    pass


class UnsupportedPlatformError(HarnessError):
    pass


class EmitError(HarnessError):
    pass


class ConfigError(HarnessError):
    pass
