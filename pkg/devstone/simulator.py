"""Sequential PDEVS abstract simulator.

Each step advances the clock to the minimum next-event time, collects λ from
every imminent atomic, floods the outputs (and any due root injections) along
coupling chains until they land on atomic input ports, and then applies exactly
one of δint, δext or δcon per affected atomic.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from collections import deque

from devstone.core import AtomicModel, CoupledModel, Port, ValueBag, iter_atomics, validate
from devstone.errors import (
    InvalidTimeAdvanceError,
    ModelValidationError,
    RoutingLoopError,
    ScheduleError,
    SimulationError,
    SimulationTimeoutError,
    StepLimitExceededError,
)
from devstone.models import Direction, InjectionSchedule

log = logging.getLogger(__name__)

INFINITY = math.inf
DEFAULT_MAX_STEPS = 10**9


class SimulationContext:
    """Clock, per-atomic tL/tN bookkeeping and the pending injection queue.

    Passive atomics (tN = +inf) are kept out of the event heap; heap entries carry
    a version number so rescheduled atomics leave harmless stale entries behind.
    """

    def __init__(
        self,
        root: CoupledModel,
        schedule: InjectionSchedule,
        *,
        trace: bool = False,
    ) -> None:
        self.root = root
        self.clock = 0.0
        self.steps = 0
        self.atomics: list[AtomicModel] = list(iter_atomics(root))
        self._index: dict[AtomicModel, int] = {a: i for i, a in enumerate(self.atomics)}
        n = len(self.atomics)
        self.tl: list[float] = [0.0] * n
        self.tn: list[float] = [INFINITY] * n
        self._version: list[int] = [0] * n
        self._heap: list[tuple[float, int, int]] = []
        self._injections = deque(schedule.events)
        self.root_outputs: dict[str, int] = dict.fromkeys(root.out_ports, 0)
        self.clock_trace: list[float] | None = [] if trace else None

        for i, atomic in enumerate(self.atomics):
            atomic.init()
            for port in (*atomic.in_ports.values(), *atomic.out_ports.values()):
                port.bag.clear()
            self._schedule(i, 0.0)

    # ── Protocol ────────────────────────────────────────────────────────

    def next_event_time(self) -> float:
        heap = self._heap
        while heap and heap[0][2] != self._version[heap[0][1]]:
            heapq.heappop(heap)
        t_internal = heap[0][0] if heap else INFINITY
        t_injection = self._injections[0].time if self._injections else INFINITY
        return min(t_internal, t_injection)

    def step(self) -> SimulationContext:
        t = self.next_event_time()
        if t == INFINITY:
            raise SimulationError("step() called on a quiescent simulation")
        self.clock = t

        imminent: list[int] = []
        heap = self._heap
        while heap and heap[0][0] == t:
            _, i, version = heapq.heappop(heap)
            if version == self._version[i]:
                imminent.append(i)

        receivers: dict[int, None] = {}
        for i in imminent:
            atomic = self.atomics[i]
            atomic.lambdaf()
            for port in atomic.out_ports.values():
                if port.bag.values:
                    values = port.bag.values
                    port.bag.clear()
                    self._route(port, values, receivers)

        while self._injections and self._injections[0].time == t:
            inj = self._injections.popleft()
            self._route(self.root.in_ports[inj.port], [inj.payload], receivers)

        imminent_set = set(imminent)
        for i in imminent:
            atomic = self.atomics[i]
            if i in receivers:
                atomic.delta_con(self._inputs(atomic))
            else:
                atomic.delta_int()
            self._finish_transition(i, t)

        for i in receivers:
            if i in imminent_set:
                continue
            e = t - self.tl[i]
            if e < 0 or t > self.tn[i]:
                raise SimulationError(f"causality violated at {self.atomics[i].path}: e={e}")
            atomic = self.atomics[i]
            atomic.delta_ext(e, self._inputs(atomic))
            self._finish_transition(i, t)

        self.steps += 1
        if self.clock_trace is not None:
            self.clock_trace.append(t)
        return self

    def run_to_quiescence(
        self,
        max_steps: int = DEFAULT_MAX_STEPS,
        deadline: float | None = None,
    ) -> SimulationContext:
        """Step until nothing is scheduled.

        ``deadline`` is a ``time.monotonic()`` value checked between steps.
        """
        taken = 0
        while self.next_event_time() != INFINITY:
            if taken >= max_steps:
                raise StepLimitExceededError(
                    f"no quiescence after {taken} steps (clock={self.clock}); suspected livelock"
                )
            if deadline is not None and time.monotonic() >= deadline:
                raise SimulationTimeoutError(f"deadline reached after {taken} steps")
            self.step()
            taken += 1
        log.debug("Quiescent after %d step(s), clock=%s", self.steps, self.clock)
        return self

    # ── Internals ───────────────────────────────────────────────────────

    def _schedule(self, i: int, tl: float) -> None:
        ta = self.atomics[i].ta()
        if not ta >= 0.0:
            raise InvalidTimeAdvanceError(f"{self.atomics[i].path}: ta() returned {ta}")
        tn = tl + ta
        self.tl[i] = tl
        self.tn[i] = tn
        self._version[i] += 1
        if tn != INFINITY:
            heapq.heappush(self._heap, (tn, i, self._version[i]))

    def _finish_transition(self, i: int, t: float) -> None:
        for port in self.atomics[i].in_ports.values():
            port.bag.clear()
        self._schedule(i, t)

    @staticmethod
    def _inputs(atomic: AtomicModel) -> dict[str, ValueBag]:
        return {name: port.bag for name, port in atomic.in_ports.items()}

    def _route(self, source: Port, values: list[int], receivers: dict[int, None]) -> None:
        """Flood ``values`` from ``source`` along EIC/IC/EOC chains to atomic inputs."""
        stack: list[tuple[Port, int]] = [(source, 0)]
        path: list[Port] = []
        on_path: set[Port] = set()
        while stack:
            port, depth = stack.pop()
            while len(path) > depth:
                on_path.discard(path.pop())
            if port in on_path:
                loop = " -> ".join(p.path for p in (*path, port))
                raise RoutingLoopError(f"instantaneous coupling loop: {loop}")

            owner = port.owner
            if port.direction is Direction.INPUT:
                if isinstance(owner, AtomicModel):
                    port.bag.extend(values)
                    receivers[self._index[owner]] = None
                    continue
                targets = owner.fanout().get(port)  # type: ignore[attr-defined]
            else:
                parent = owner.parent
                if parent is None:
                    self.root_outputs[port.name] = self.root_outputs.get(port.name, 0) + len(
                        values
                    )
                    continue
                targets = parent.fanout().get(port)

            if targets:
                path.append(port)
                on_path.add(port)
                stack.extend((target, depth + 1) for target in reversed(targets))


def initialize(
    root: CoupledModel,
    schedule: InjectionSchedule,
    *,
    trace: bool = False,
) -> SimulationContext:
    report = validate(root)
    if not report.ok:
        raise ModelValidationError(report)
    for inj in schedule.events:
        if inj.port not in root.in_ports:
            raise ScheduleError(f"{root.name} has no input port {inj.port!r}")
    return SimulationContext(root, schedule, trace=trace)
