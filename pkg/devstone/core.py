"""Parallel DEVS model algebra: ports, value bags, atomic behaviour and coupled models.

Coupled models keep their components and couplings exactly as built; nothing here
flattens a hierarchy. Couplings are classified into EIC/EOC/IC purely from the
roles of their two endpoints.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from enum import Enum
from typing import NamedTuple

from devstone.errors import (
    CouplingDirectionError,
    DanglingEndpointError,
    DuplicateNameError,
    ModelError,
    SelfCouplingError,
)
from devstone.models import CouplingClass, Direction, ValidationReport, Violation

log = logging.getLogger(__name__)


class _SelfRef(Enum):
    SELF = "SELF"


SELF = _SelfRef.SELF
"""Stands for the coupled model's own boundary inside an endpoint."""


# ── Ports and bags ──────────────────────────────────────────────────────


class ValueBag:
    """Payloads delivered to (or emitted on) one port during the current step."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable[int] = ()) -> None:
        self.values: list[int] = list(values)

    def extend(self, values: Iterable[int]) -> None:
        self.values.extend(values)

    def clear(self) -> None:
        self.values = []

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ValueBag):
            return self.values == other.values
        return NotImplemented

    def __repr__(self) -> str:
        return f"ValueBag({self.values!r})"


class Port:
    __slots__ = ("name", "direction", "owner", "bag")

    def __init__(self, name: str, direction: Direction, owner: Component) -> None:
        self.name = name
        self.direction = direction
        self.owner = owner
        self.bag = ValueBag()

    @property
    def path(self) -> str:
        return f"{self.owner.path}.{self.name}"

    def __repr__(self) -> str:
        return f"Port({self.path}, {self.direction.value})"


# ── Components ──────────────────────────────────────────────────────────


class Component:
    def __init__(self, name: str) -> None:
        if not name or "/" in name or "." in name:
            raise ModelError(f"invalid component name {name!r}")
        self.name = name
        self.parent: CoupledModel | None = None
        self.in_ports: dict[str, Port] = {}
        self.out_ports: dict[str, Port] = {}

    def add_in_port(self, name: str) -> Port:
        return self._add_port(name, Direction.INPUT, self.in_ports)

    def add_out_port(self, name: str) -> Port:
        return self._add_port(name, Direction.OUTPUT, self.out_ports)

    def _add_port(self, name: str, direction: Direction, ports: dict[str, Port]) -> Port:
        if name in ports:
            raise DuplicateNameError(f"{self.name}: {direction.value} port {name!r} exists")
        port = Port(name, direction, self)
        ports[name] = port
        return port

    def ports(self, direction: Direction) -> dict[str, Port]:
        return self.in_ports if direction is Direction.INPUT else self.out_ports

    @property
    def path(self) -> str:
        parts = [self.name]
        node = self.parent
        while node is not None:
            parts.append(node.name)
            node = node.parent
        return "/".join(reversed(parts))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.path})"


class AtomicModel(Component, ABC):
    """Behavioural unit: init, δint, δext, δcon, λ and ta over an owned ``state``.

    λ writes into output-port bags through :meth:`emit`; the simulator routes
    and clears them.
    """

    state: object

    @abstractmethod
    def init(self) -> None: ...

    @abstractmethod
    def delta_int(self) -> None: ...

    @abstractmethod
    def delta_ext(self, e: float, inputs: Mapping[str, ValueBag]) -> None: ...

    @abstractmethod
    def lambdaf(self) -> None: ...

    @abstractmethod
    def ta(self) -> float: ...

    def delta_con(self, inputs: Mapping[str, ValueBag]) -> None:
        """δext(δint(s), 0, x); with nothing in any bag this is plain δint."""
        self.delta_int()
        if any(len(bag) for bag in inputs.values()):
            self.delta_ext(0.0, inputs)

    def emit(self, port: str, values: Iterable[int]) -> None:
        self.out_ports[port].bag.extend(values)


class Endpoint(NamedTuple):
    component: Component | _SelfRef
    port: str

    def label(self, owner: CoupledModel) -> str:
        target = owner if self.component is SELF else self.component
        return f"{target.path}.{self.port}"  # type: ignore[union-attr]


class Coupling(NamedTuple):
    cls: CouplingClass
    src: Endpoint
    dst: Endpoint


class CoupledModel(Component):
    """Structural unit: child components plus EIC, EOC and IC relations."""

    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.components: list[Component] = []
        self._by_name: dict[str, Component] = {}
        self._couplings: list[Coupling] = []
        self._keys: set[tuple[Endpoint, Endpoint]] = set()
        self._fanout: dict[Port, list[Port]] | None = None

    # ── Components ──────────────────────────────────────────────────────

    def add_component(self, child: Component) -> CoupledModel:
        if child.name in self._by_name:
            raise DuplicateNameError(f"{self.path}: component {child.name!r} already present")
        child.parent = self
        self.components.append(child)
        self._by_name[child.name] = child
        self._fanout = None
        return self

    def remove_component(self, name: str) -> Component:
        """Detach a child. Couplings that mention it stay behind and fail validation."""
        child = self._by_name.pop(name)
        self.components.remove(child)
        child.parent = None
        self._fanout = None
        return child

    # ── Couplings ───────────────────────────────────────────────────────

    def add_coupling(self, src: Endpoint | Port, dst: Endpoint | Port) -> CoupledModel:
        src_ep, dst_ep = self._endpoint(src), self._endpoint(dst)
        key = (src_ep, dst_ep)
        if key in self._keys:
            return self
        cls = self.classify(src_ep, dst_ep)
        self._couplings.append(Coupling(cls, src_ep, dst_ep))
        self._keys.add(key)
        self._fanout = None
        return self

    def remove_coupling(self, src: Endpoint | Port, dst: Endpoint | Port) -> None:
        key = (self._endpoint(src), self._endpoint(dst))
        if key not in self._keys:
            raise DanglingEndpointError(f"{self.path}: no such coupling")
        self._keys.discard(key)
        self._couplings = [c for c in self._couplings if (c.src, c.dst) != key]
        self._fanout = None

    def couplings(self, cls: CouplingClass | None = None) -> list[Coupling]:
        if cls is None:
            return list(self._couplings)
        return [c for c in self._couplings if c.cls is cls]

    @property
    def eic(self) -> list[Coupling]:
        return self.couplings(CouplingClass.EIC)

    @property
    def eoc(self) -> list[Coupling]:
        return self.couplings(CouplingClass.EOC)

    @property
    def ic(self) -> list[Coupling]:
        return self.couplings(CouplingClass.IC)

    def _endpoint(self, ref: Endpoint | Port) -> Endpoint:
        if isinstance(ref, Endpoint):
            return ref
        owner = SELF if ref.owner is self else ref.owner
        return Endpoint(owner, ref.name)

    def classify(self, src: Endpoint, dst: Endpoint) -> CouplingClass:
        """Decide the coupling class from endpoint roles, raising if the pair is illegal."""
        src_self, dst_self = src.component is SELF, dst.component is SELF
        if src_self and dst_self:
            raise CouplingDirectionError(f"{self.path}: boundary-to-boundary coupling")
        if src_self:
            cls, src_dir, dst_dir = CouplingClass.EIC, Direction.INPUT, Direction.INPUT
        elif dst_self:
            cls, src_dir, dst_dir = CouplingClass.EOC, Direction.OUTPUT, Direction.OUTPUT
        else:
            cls, src_dir, dst_dir = CouplingClass.IC, Direction.OUTPUT, Direction.INPUT

        src_port = self.resolve(src, src_dir)
        dst_port = self.resolve(dst, dst_dir)
        if cls is CouplingClass.IC and src_port.owner is dst_port.owner:
            raise SelfCouplingError(f"{self.path}: {src_port.owner.name} coupled to itself")
        return cls

    def resolve(self, endpoint: Endpoint, direction: Direction) -> Port:
        if endpoint.component is SELF:
            target: Component = self
        else:
            target = endpoint.component  # type: ignore[assignment]
            if self._by_name.get(target.name) is not target:
                raise DanglingEndpointError(f"{self.path}: {target.name!r} is not a component")
        port = target.ports(direction).get(endpoint.port)
        if port is not None:
            return port
        other = Direction.OUTPUT if direction is Direction.INPUT else Direction.INPUT
        if endpoint.port in target.ports(other):
            raise CouplingDirectionError(
                f"{self.path}: {target.name}.{endpoint.port} is not an {direction.value} port"
            )
        raise DanglingEndpointError(f"{self.path}: {target.name} has no port {endpoint.port!r}")

    def fanout(self) -> dict[Port, list[Port]]:
        """Source port -> target ports, in coupling insertion order."""
        if self._fanout is None:
            table: dict[Port, list[Port]] = {}
            for c in self._couplings:
                src_dir = Direction.INPUT if c.cls is CouplingClass.EIC else Direction.OUTPUT
                dst_dir = Direction.OUTPUT if c.cls is CouplingClass.EOC else Direction.INPUT
                src = self.resolve(c.src, src_dir)
                table.setdefault(src, []).append(self.resolve(c.dst, dst_dir))
            self._fanout = table
        return self._fanout


# ── Tree walks ──────────────────────────────────────────────────────────


def iter_components(root: Component) -> Iterator[Component]:
    """Depth-first pre-order walk; iterative so deep hierarchies are safe."""
    stack: list[Component] = [root]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, CoupledModel):
            stack.extend(reversed(node.components))


def iter_atomics(root: Component) -> Iterator[AtomicModel]:
    for node in iter_components(root):
        if isinstance(node, AtomicModel):
            yield node


def count_atomics(root: Component) -> int:
    return sum(1 for _ in iter_atomics(root))


# ── Validation ──────────────────────────────────────────────────────────


def validate(model: CoupledModel) -> ValidationReport:
    """Check every coupled model in the hierarchy; violations are data, not exceptions."""
    violations: list[Violation] = []
    for node in iter_components(model):
        if isinstance(node, CoupledModel):
            violations.extend(_check_coupled(node))
    if violations:
        log.debug("Validation of %s found %d violation(s)", model.path, len(violations))
    return ValidationReport(violations=violations)


def _check_coupled(node: CoupledModel) -> list[Violation]:
    found: list[Violation] = []
    for name, seen in Counter(c.name for c in node.components).items():
        if seen == 1:
            continue
        found.append(
            Violation(kind="duplicate_name", path=node.path, message=f"{name!r} repeated")
        )

    for c in node.couplings():
        where = f"{node.path}: {c.src.port} -> {c.dst.port}"
        try:
            cls = node.classify(c.src, c.dst)
        except DanglingEndpointError as exc:
            found.append(Violation(kind="dangling_endpoint", path=node.path, message=str(exc)))
            continue
        except SelfCouplingError as exc:
            found.append(Violation(kind="self_coupling", path=node.path, message=str(exc)))
            continue
        except CouplingDirectionError as exc:
            found.append(Violation(kind="direction", path=node.path, message=str(exc)))
            continue
        if cls is not c.cls:
            found.append(
                Violation(
                    kind="classification",
                    path=node.path,
                    message=f"{where} stored as {c.cls.value}, roles say {cls.value}",
                )
            )
    return found
