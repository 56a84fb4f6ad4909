"""Bi-vectorization of the two triangles and equal-length work units.

Each strict triangle of an n x n matrix splits into n-1 vectors: the L
vector of step k holds rows k+1..n of column k, the U vector holds columns
k+1..n of row k (1-based), so its length is n-k. Pairing the vector of
step k with the one of step n-k gives units of length exactly n. For even
n the two middle vectors (one per triangle, length n/2) form one unit.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True, order=True)
class VectorDescriptor:
    triangle: str
    k: int
    length: int

    def __post_init__(self):
        if self.triangle not in ("L", "U"):
            raise ParameterError(f"triangle must be 'L' or 'U', got {self.triangle!r}")
        if self.k < 1 or self.length < 1:
            raise ParameterError("k and length must be >= 1")

    def positions(self):
        """0-based ``(rows, cols)`` index arrays of the entries this vector covers."""
        n = self.k + self.length
        tail = np.arange(self.k, n)
        head = np.full(self.length, self.k - 1)
        return (tail, head) if self.triangle == "L" else (head, tail)

    def __str__(self):
        return f"{self.triangle}{self.k}[{self.length}]"


@dataclass(frozen=True)
class PairedUnit:
    members: tuple[VectorDescriptor, ...]

    def __post_init__(self):
        if not 1 <= len(self.members) <= 2:
            raise ParameterError("a unit holds one or two vectors")

    @property
    def total_length(self) -> int:
        return sum(m.length for m in self.members)

    def __str__(self):
        return " + ".join(str(m) for m in self.members)


@dataclass(frozen=True)
class WorkSummary:
    per_worker_length: tuple[int, ...]
    per_worker_units: tuple[int, ...]

    @property
    def spread(self) -> int:
        return max(self.per_worker_length) - min(self.per_worker_length)


@dataclass(frozen=True, eq=False)
class EbvPlan:
    n: int
    units: tuple[PairedUnit, ...]
    owner: tuple[int, ...]
    workers: int

    def __post_init__(self):
        if len(self.owner) != len(self.units):
            raise ParameterError("owner map must cover every unit")
        if any(not 0 <= w < self.workers for w in self.owner):
            raise ParameterError("owner id out of range")

    @cached_property
    def unit_of_vector(self) -> dict[tuple[str, int], int]:
        return {(m.triangle, m.k): u for u, unit in enumerate(self.units) for m in unit.members}

    @cached_property
    def column_owner(self) -> np.ndarray:
        """Worker owning each 0-based column's sub-diagonal L entries and its diagonal.

        Column n-1 has no L vector; its diagonal goes to the owner of column n-2.
        """
        n = self.n
        own = np.empty(n, dtype=np.int64)
        for c in range(n - 1):
            own[c] = self.owner[self.unit_of_vector["L", c + 1]]
        own[n - 1] = own[n - 2]
        own.setflags(write=False)
        return own

    @cached_property
    def row_owner(self) -> np.ndarray:
        """Worker owning each 0-based row's right-of-diagonal U entries (-1 for the last row)."""
        n = self.n
        own = np.full(n, -1, dtype=np.int64)
        for r in range(n - 1):
            own[r] = self.owner[self.unit_of_vector["U", r + 1]]
        own.setflags(write=False)
        return own

    def pivot_owner(self, i) -> int:
        """Worker responsible for 0-based diagonal entry ``i``."""
        return int(self.column_owner[i])

    def owned_columns(self, w) -> np.ndarray:
        return np.flatnonzero(self.column_owner == w)

    def unit_at(self, i, j) -> int:
        """Unit index covering off-diagonal 0-based position ``(i, j)``."""
        if i == j:
            raise ParameterError("diagonal entries belong to no unit")
        return self.unit_of_vector[("L", j + 1) if i > j else ("U", i + 1)]

    def dump(self) -> str:
        return "\n".join(
            f"unit {u}: {unit} -> worker {w}"
            for u, (unit, w) in enumerate(zip(self.units, self.owner))
        )


def bivectorize(n) -> list[VectorDescriptor]:
    if n < 2:
        raise ParameterError(f"bivectorize needs n >= 2, got {n}")
    return [VectorDescriptor(t, k, n - k) for t in "LU" for k in range(1, n)]


def equalize(descriptors, n) -> list[PairedUnit]:
    """Pair step k with step n-k inside each triangle; merge the even-n middles."""
    if sorted(descriptors) != sorted(bivectorize(n)):
        raise ParameterError(f"descriptors do not match bivectorize({n})")
    by_key = {(d.triangle, d.k): d for d in descriptors}
    units = [
        PairedUnit((by_key[t, k], by_key[t, n - k]))
        for t in "LU"
        for k in range(1, (n - 1) // 2 + 1)
    ]
    if n % 2 == 0:
        units.append(PairedUnit((by_key["L", n // 2], by_key["U", n // 2])))
    return units


def assign(units, workers) -> EbvPlan:
    """Round-robin units over ``workers``; more workers than units are clamped."""
    if workers < 1:
        raise ParameterError(f"need at least one worker, got {workers}")
    units = tuple(units)
    if not units:
        raise ParameterError("no units to assign")
    n = max(m.k + m.length for u in units for m in u.members)
    w = min(workers, len(units))
    return EbvPlan(n, units, tuple(i % w for i in range(len(units))), w)


def make_plan(n, workers) -> EbvPlan:
    return assign(equalize(bivectorize(n), n), workers)


def plan_stats(plan: EbvPlan) -> WorkSummary:
    lengths = [0] * plan.workers
    counts = [0] * plan.workers
    for unit, w in zip(plan.units, plan.owner):
        lengths[w] += unit.total_length
        counts[w] += 1
    return WorkSummary(tuple(lengths), tuple(counts))
