"""Closed-form and recursive predictions of DEVStone atomic, transition and event counts.

All arithmetic is on Python integers, checked against a signed 128-bit ceiling so
that a count too large to store downstream is reported instead of written out.
"""

from __future__ import annotations

from devstone.errors import CountOverflowError
from devstone.models import AnalyticPrediction, BenchmarkSpec, Family

COUNT_LIMIT = 2**127 - 1


def _checked(value: int, what: str) -> int:
    if value > COUNT_LIMIT:
        raise CountOverflowError(f"{what} exceeds the 128-bit count range")
    return value


def _triangle(n: int) -> int:
    """1 + 2 + ... + n, zero for n <= 0."""
    return n * (n + 1) // 2 if n > 0 else 0


# ── Atomic counts ───────────────────────────────────────────────────────


def atomic_count(family: Family, width: int, depth: int) -> int:
    if family is Family.HOMOD:
        per_level = (width - 1) + _triangle(width - 1)
    elif family is Family.HOMEM:
        per_level = 2 * (width - 1)
    else:
        per_level = width - 1
    return _checked(per_level * (depth - 1) + 1, "atomic count")


# ── HI / HO ─────────────────────────────────────────────────────────────


def hi_transitions_sum(width: int, depth: int) -> int:
    """((w-1) + sum_{i=1}^{w-2} i) * (d-1) + 1, summed term by term."""
    per_level = (width - 1) + sum(range(1, width - 1))
    return _checked(per_level * (depth - 1) + 1, "HI transitions")


def hi_transitions_closed(width: int, depth: int) -> int:
    """((w^2 - w) / 2) * (d-1) + 1."""
    return _checked((width * width - width) // 2 * (depth - 1) + 1, "HI transitions")


# ── HOmod ───────────────────────────────────────────────────────────────


def homod_transitions(width: int, depth: int) -> int:
    w1 = width - 1
    pulses = (depth - 1) + w1 * _triangle(depth - 2)
    atoms_per_level = w1 + _triangle(w1)
    return _checked((depth - 1) * w1 * w1 + pulses * atoms_per_level + 1, "HOmod transitions")


class HomodRecursion:
    """The W, K and P helpers of the HOmod event recursion for a fixed width.

    P_l^j is the number of payloads a level-l coupled model receives on in2 at
    its j-th consecutive input step; it is zero outside 1..K_l.
    """

    def __init__(self, width: int) -> None:
        if width < 2:
            raise ValueError("HOmod needs width >= 2")
        self.width = width
        self._rows: list[list[int]] = [[1]]

    def W(self, i: int) -> int:  # noqa: N802
        return max(self.width - i, 0)

    def K(self, level: int) -> int:  # noqa: N802
        return 1 + (level - 1) * self.W(1)

    def P(self, level: int, j: int) -> int:  # noqa: N802
        if level < 1 or j < 1 or j > self.K(level):
            return 0
        while len(self._rows) < level:
            self._extend()
        return self._rows[level - 1][j - 1]

    def _extend(self) -> None:
        prev_level = len(self._rows)
        w = self.width
        row = []
        for j in range(1, self.K(prev_level + 1) + 1):
            total = sum(self.P(prev_level, j - i + 1) for i in range(1, w + 1))
            row.append(_checked((w - 1) * total, f"HOmod P[{prev_level + 1}][{j}]"))
        self._rows.append(row)

    def window(self, level: int, c: int) -> list[int]:
        """P_l^{c-i+1} for i = 1..w."""
        return [self.P(level, c - i + 1) for i in range(1, self.width + 1)]


def homod_event_terms(width: int, depth: int) -> list[tuple[int, int, int]]:
    """(level, c, contribution) for every term of the HOmod event double sum."""
    rec = HomodRecursion(width)
    terms: list[tuple[int, int, int]] = []
    for level in range(1, depth):
        for c in range(1, rec.K(level) + width):
            window = rec.window(level, c)
            term = rec.W(1) * sum(window) + sum(
                rec.W(i) * p for i, p in enumerate(window, start=1)
            )
            terms.append((level, c, _checked(term, f"HOmod term l={level} c={c}")))
    return terms


def homod_event_count(width: int, depth: int) -> int:
    if width < 2 or depth < 1:
        raise ValueError("HOmod needs width >= 2 and depth >= 1")
    total = 1
    for _, _, term in homod_event_terms(width, depth):
        total = _checked(total + term, "HOmod events")
    return total


# ── HOmem ───────────────────────────────────────────────────────────────


def homem_event_count(width: int, depth: int) -> int:
    if width < 2 or depth < 1:
        raise ValueError("HOmem needs width >= 2 and depth >= 1")
    w1 = width - 1
    total = 1
    for level in range(1, depth):
        total = _checked(total + w1 ** (2 * level) + w1 ** (2 * level - 1), "HOmem events")
    return total


# ── Dispatch ────────────────────────────────────────────────────────────


def predict(spec: BenchmarkSpec) -> AnalyticPrediction:
    """Atomic count plus transition and event counts for ``spec.n_events`` injections."""
    w, d, n = spec.width, spec.depth, spec.n_events
    atoms = atomic_count(spec.family, w, d)

    match spec.family:
        case Family.LI:
            ints = exts = events = atoms
        case Family.HI | Family.HO:
            ints = exts = events = hi_transitions_closed(w, d)
        case Family.HOMOD:
            ints = exts = homod_transitions(w, d)
            events = homod_event_count(w, d)
        case Family.HOMEM:
            ints = exts = atoms
            events = homem_event_count(w, d)

    return AnalyticPrediction(
        n_atomics=atoms,
        n_delta_int=_checked(n * ints, "delta_int count"),
        n_delta_ext=_checked(n * exts, "delta_ext count"),
        n_events=_checked(n * events, "event count"),
    )
