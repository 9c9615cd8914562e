"""DEVStone instrumented atomic model and the LI, HI, HO, HOmod and HOmem builders.

Every builder produces ``depth`` nested coupled models. Levels 1..d-1 hold one
child coupled model plus that level's atomics; level d holds a single atomic
fed from the first input port. Nothing is flattened.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from itertools import pairwise

from devstone.core import AtomicModel, CoupledModel, ValueBag, iter_components
from devstone.models import (
    BenchmarkSpec,
    DevstoneState,
    Family,
    Injection,
    InjectionSchedule,
    Phase,
    TransitionCounters,
)
from devstone.workload import burn

log = logging.getLogger(__name__)

INFINITY = float("inf")

ROOT_INPUTS: dict[Family, tuple[str, ...]] = {
    Family.LI: ("in",),
    Family.HI: ("in",),
    Family.HO: ("in1", "in2"),
    Family.HOMOD: ("in1", "in2"),
    Family.HOMEM: ("in1", "in2"),
}

ROOT_OUTPUTS: dict[Family, tuple[str, ...]] = {
    Family.LI: ("out",),
    Family.HI: ("out",),
    Family.HO: ("out1", "out2"),
    Family.HOMOD: ("out",),
    Family.HOMEM: ("out",),
}


# ── Instrumented atomic ─────────────────────────────────────────────────


class DevstoneAtomic(AtomicModel):
    """Collects every received payload and re-emits the whole list one instant later."""

    def __init__(
        self,
        name: str,
        delta_int_delay: float,
        delta_ext_delay: float,
        counters: TransitionCounters,
    ) -> None:
        if delta_int_delay < 0 or delta_ext_delay < 0:
            raise ValueError("transition delays must be >= 0")
        super().__init__(name)
        self.i_in = self.add_in_port("in")
        self.o_out = self.add_out_port("out")
        self.delta_int_delay = delta_int_delay
        self.delta_ext_delay = delta_ext_delay
        self.counters = counters
        self.state = DevstoneState()

    def init(self) -> None:
        self.state = DevstoneState()

    def delta_int(self) -> None:
        self.counters.num_delt_ints += 1
        burn(self.delta_int_delay)
        self.state.events = []
        self.state.phase = Phase.PASSIVE
        self.state.sigma = INFINITY

    def delta_ext(self, e: float, inputs: Mapping[str, ValueBag]) -> None:
        self.counters.num_delt_exts += 1
        burn(self.delta_ext_delay)
        values = inputs["in"].values
        self.counters.num_of_events += len(values)
        self.state.events.extend(values)
        self.state.phase = Phase.ACTIVE
        self.state.sigma = 0.0

    def lambdaf(self) -> None:
        self.emit("out", self.state.events)

    def ta(self) -> float:
        return self.state.sigma


def make_devstone_atomic(
    delta_int: float,
    delta_ext: float,
    counters: TransitionCounters,
    name: str = "atomic",
) -> DevstoneAtomic:
    return DevstoneAtomic(name, delta_int, delta_ext, counters)


# ── Topology builders ───────────────────────────────────────────────────

AtomicFactory = Callable[[str], DevstoneAtomic]
LevelWiring = Callable[[CoupledModel, CoupledModel, int, int, AtomicFactory], None]


def _wire_li_level(
    node: CoupledModel, child: CoupledModel, level: int, width: int, new: AtomicFactory
) -> None:
    _wire_chain_level(node, child, level, width, new, chain=False)


def _wire_hi_level(
    node: CoupledModel, child: CoupledModel, level: int, width: int, new: AtomicFactory
) -> None:
    _wire_chain_level(node, child, level, width, new, chain=True)


def _wire_chain_level(
    node: CoupledModel,
    child: CoupledModel,
    level: int,
    width: int,
    new: AtomicFactory,
    *,
    chain: bool,
) -> None:
    atoms = [new(f"atomic_{level}_{i}") for i in range(1, width)]
    for a in atoms:
        node.add_component(a)

    node.add_coupling(node.in_ports["in"], child.in_ports["in"])
    for a in atoms:
        node.add_coupling(node.in_ports["in"], a.i_in)
    if chain:
        for a, b in pairwise(atoms):
            node.add_coupling(a.o_out, b.i_in)
    node.add_coupling(child.out_ports["out"], node.out_ports["out"])


def _wire_ho_level(
    node: CoupledModel, child: CoupledModel, level: int, width: int, new: AtomicFactory
) -> None:
    atoms = [new(f"atomic_{level}_{i}") for i in range(1, width)]
    for a in atoms:
        node.add_component(a)

    node.add_coupling(node.in_ports["in1"], child.in_ports["in1"])
    node.add_coupling(node.in_ports["in2"], child.in_ports["in2"])
    for a in atoms:
        node.add_coupling(node.in_ports["in2"], a.i_in)
    for a, b in pairwise(atoms):
        node.add_coupling(a.o_out, b.i_in)
    node.add_coupling(child.out_ports["out1"], node.out_ports["out1"])
    for a in atoms:
        node.add_coupling(a.o_out, node.out_ports["out2"])


def _wire_homod_level(
    node: CoupledModel, child: CoupledModel, level: int, width: int, new: AtomicFactory
) -> None:
    # Rows sit right-aligned on columns 1..w-1: rows 1 and 2 fill every column,
    # row k >= 3 starts at column k-1, so in2 reaches a diagonal of first atomics.
    rows: dict[int, dict[int, DevstoneAtomic]] = {}
    for row in range(1, width + 1):
        first = 1 if row <= 2 else row - 1
        rows[row] = {col: new(f"atomic_{level}_{row}_{col}") for col in range(first, width)}
        for a in rows[row].values():
            node.add_component(a)

    in2 = node.in_ports["in2"]
    node.add_coupling(node.in_ports["in1"], child.in_ports["in1"])
    for a in rows[1].values():
        node.add_coupling(in2, a.i_in)
    for row in range(2, width + 1):
        node.add_coupling(in2, next(iter(rows[row].values())).i_in)

    for upper in rows[2].values():
        for a in rows[1].values():
            node.add_coupling(upper.o_out, a.i_in)
    for row in range(3, width + 1):
        for col, a in rows[row].items():
            node.add_coupling(a.o_out, rows[row - 1][col].i_in)
    for a in rows[1].values():
        node.add_coupling(a.o_out, child.in_ports["in2"])
    node.add_coupling(child.out_ports["out"], node.out_ports["out"])


def _wire_homem_level(
    node: CoupledModel, child: CoupledModel, level: int, width: int, new: AtomicFactory
) -> None:
    first = [new(f"atomic_{level}_1_{i}") for i in range(1, width)]
    second = [new(f"atomic_{level}_2_{i}") for i in range(1, width)]
    for a in (*first, *second):
        node.add_component(a)

    node.add_coupling(node.in_ports["in1"], child.in_ports["in1"])
    for b in second:
        node.add_coupling(node.in_ports["in2"], b.i_in)
    for b in second:
        for a in first:
            node.add_coupling(b.o_out, a.i_in)
    for a in first:
        node.add_coupling(a.o_out, child.in_ports["in2"])
    node.add_coupling(child.out_ports["out"], node.out_ports["out"])


_LEVEL_WIRING: dict[Family, LevelWiring] = {
    Family.LI: _wire_li_level,
    Family.HI: _wire_hi_level,
    Family.HO: _wire_ho_level,
    Family.HOMOD: _wire_homod_level,
    Family.HOMEM: _wire_homem_level,
}


def build(spec: BenchmarkSpec, counters: TransitionCounters) -> CoupledModel:
    """Build the root coupled model of ``spec``; all atomics share ``counters``."""

    def new_atomic(name: str) -> DevstoneAtomic:
        return DevstoneAtomic(name, spec.delta_int, spec.delta_ext, counters)

    family = spec.family
    levels: list[CoupledModel] = []
    for level in range(1, spec.depth + 1):
        node = CoupledModel(f"{family.value}_{level}")
        for name in ROOT_INPUTS[family]:
            node.add_in_port(name)
        for name in ROOT_OUTPUTS[family]:
            node.add_out_port(name)
        levels.append(node)

    wire = _LEVEL_WIRING[family]
    for level, (node, child) in enumerate(pairwise(levels), start=1):
        node.add_component(child)
        wire(node, child, level, spec.width, new_atomic)

    deepest = levels[-1]
    atom = new_atomic(f"atomic_{spec.depth}_1")
    deepest.add_component(atom)
    deepest.add_coupling(deepest.in_ports[ROOT_INPUTS[family][0]], atom.i_in)
    deepest.add_coupling(atom.o_out, deepest.out_ports[ROOT_OUTPUTS[family][0]])

    log.debug("Built %s", spec.label)
    return levels[0]


def injection_schedule(spec: BenchmarkSpec) -> InjectionSchedule:
    """N events at t = 0..N-1, each delivered to every root input port at once."""
    return InjectionSchedule(
        events=[
            Injection(time=float(i), port=port, payload=i)
            for i in range(spec.n_events)
            for port in ROOT_INPUTS[spec.family]
        ]
    )


def dump_outline(model: CoupledModel) -> list[str]:
    """Depth-first ``COMPONENT``/``COUPLING`` lines, stable across runs."""
    lines: list[str] = []
    for node in iter_components(model):
        kind = "coupled" if isinstance(node, CoupledModel) else "atomic"
        lines.append(f"COMPONENT {node.path} kind={kind}")
        if isinstance(node, CoupledModel):
            for c in node.couplings():
                lines.append(f"COUPLING {c.cls.value} {c.src.label(node)} -> {c.dst.label(node)}")
    return lines
