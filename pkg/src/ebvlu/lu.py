"""Sequential right-looking LU (Doolittle, no pivoting) and triangular solves.

This is the reference path: the parallel executor must reproduce its output
bit for bit. Step ``r`` scales the sub-diagonal part of column ``r`` by the
pivot and then applies the rank-1 update to the trailing block, in ascending
``r`` order for every entry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ParameterError, SingularPivotError
from .matrix import as_dense, as_vector

EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class PivotPolicy:
    """Absolute pivot floor; a pivot with ``|p| <= threshold`` is singular."""

    threshold: float = 0.0

    def __post_init__(self):
        if not self.threshold >= 0.0:
            raise ParameterError(f"pivot threshold must be >= 0, got {self.threshold}")

    @classmethod
    def default_for(cls, a) -> "PivotPolicy":
        """Threshold ``n * eps * ||A||_inf``."""
        a = as_dense(a)
        return cls(a.n * EPS * a.norm_inf())


@dataclass
class OpCount:
    """Mutable multiply-add / division tally for instrumented calls."""

    madds: int = 0
    divs: int = 0


@dataclass(frozen=True, eq=False)
class LUFactors:
    """Packed L\\U: strict lower holds L multipliers, diagonal and upper hold U."""

    packed: np.ndarray
    threshold: float = 0.0

    def __post_init__(self):
        p = np.ascontiguousarray(self.packed, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ParameterError("packed factors must be square")
        if p is self.packed:
            p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "packed", p)

    @property
    def n(self) -> int:
        return self.packed.shape[0]

    @property
    def pivots(self):
        return np.diag(self.packed).copy()

    def lower(self):
        """Unit lower-triangular L as a dense array."""
        return np.tril(self.packed, -1) + np.eye(self.n)

    def upper(self):
        return np.triu(self.packed)

    def unit_upper_row(self, r):
        """Row ``r`` of U divided by its pivot (the unit-diagonal form)."""
        return self.packed[r, r:] / self.packed[r, r]

    def reconstruct(self):
        return self.lower() @ self.upper()


@njit(nogil=True, cache=True)
def _eliminate(a, threshold):
    # Returns the 0-based step of the first singular pivot, or -1.
    n = a.shape[0]
    for r in range(n - 1):
        p = a[r, r]
        if abs(p) <= threshold:
            return r
        for i in range(r + 1, n):
            a[i, r] = a[i, r] / p
        for i in range(r + 1, n):
            li = a[i, r]
            for j in range(r + 1, n):
                a[i, j] = a[i, j] - li * a[r, j]
    if abs(a[n - 1, n - 1]) <= threshold:
        return n - 1
    return -1


def factorize_seq(a, policy: PivotPolicy | None = None, count: OpCount | None = None) -> LUFactors:
    """Factor ``a`` in place of a working copy; raises :class:`SingularPivotError`."""
    a = as_dense(a)
    policy = policy or PivotPolicy.default_for(a)
    work = np.array(a.values, copy=True)
    bad = _eliminate(work, policy.threshold)
    if bad >= 0:
        raise SingularPivotError(bad + 1, work[bad, bad], policy.threshold)
    if count is not None:
        n = a.n
        count.divs += n * (n - 1) // 2
        count.madds += sum((n - r) ** 2 for r in range(1, n))
    return LUFactors(work, policy.threshold)


def forward_substitute(f: LUFactors, b, count: OpCount | None = None):
    """Solve ``L y = b`` column by column (unit diagonal)."""
    n = f.n
    y = as_vector(b, n)
    L = f.packed
    for k in range(n - 1):
        y[k + 1:] -= L[k + 1:, k] * y[k]
        if count is not None:
            count.madds += n - k - 1
    return y


def _check_pivots(f):
    zero = np.flatnonzero(np.diag(f.packed) == 0)
    if zero.size:
        raise SingularPivotError(int(zero[0]) + 1, 0.0, 0.0)


def backward_substitute(f: LUFactors, y, count: OpCount | None = None):
    """Solve ``U x = y`` bottom-up, one U row per unknown."""
    n = f.n
    _check_pivots(f)
    x = as_vector(y, n)
    U = f.packed
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - U[k, k + 1:] @ x[k + 1:]) / U[k, k]
        if count is not None:
            count.madds += n - k - 1
            count.divs += 1
    return x


def solve_seq(a, b, policy: PivotPolicy | None = None):
    f = factorize_seq(a, policy)
    return backward_substitute(f, forward_substitute(f, b))
