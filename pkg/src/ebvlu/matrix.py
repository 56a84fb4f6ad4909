"""Matrix value types, generators, Matrix Market ingestion and residuals.

Dense matrices are stored row-major as float64. Vectors are plain 1-D
float64 numpy arrays; :func:`as_vector` validates them.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import ParameterError, ParseError, SingularDiagonalError

MM_HEADER = "%%MatrixMarket matrix coordinate real general"


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Square n x n matrix. ``values`` is a read-only C-contiguous array."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1] or vals.shape[0] < 1:
            raise ParameterError(f"expected a non-empty square matrix, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("matrix entries must be finite")
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def norm_inf(self) -> float:
        return float(np.abs(self.values).sum(axis=1).max())

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Compressed-row storage with the diagonal stored in every row."""

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        offs = np.asarray(self.row_offsets, dtype=np.int64)
        cols = np.asarray(self.col_indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if n < 1:
            raise ParameterError("dimension must be >= 1")
        if offs.shape != (n + 1,) or offs[0] != 0 or np.any(np.diff(offs) < 0):
            raise ParameterError("row_offsets must be n+1 nondecreasing indices starting at 0")
        if cols.shape != vals.shape or offs[-1] != cols.size:
            raise ParameterError("row_offsets[n] must equal the number of stored entries")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("matrix entries must be finite")
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise ParameterError("column index out of range")
        for i in range(n):
            row = cols[offs[i]:offs[i + 1]]
            if np.any(np.diff(row) <= 0):
                raise ParameterError(f"column indices of row {i} are not strictly increasing")
            if not np.any(row == i):
                raise ParameterError(f"row {i} does not store its diagonal entry")
        object.__setattr__(self, "n", n)
        for name, arr in (("row_offsets", offs), ("col_indices", cols), ("values", vals)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def row(self, i):
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def coordinates(self):
        """Stored entries as a list of 0-based ``(i, j, value)`` triples."""
        out = []
        for i in range(self.n):
            cols, vals = self.row(i)
            out.extend((i, int(j), float(v)) for j, v in zip(cols, vals))
        return out

    @classmethod
    def from_coordinates(cls, n, entries: Iterable[tuple[int, int, float]]):
        """Build from 0-based triples; duplicates are summed, missing diagonals stored as 0.0."""
        acc = defaultdict(float)
        for i, j, v in entries:
            acc[(int(i), int(j))] += float(v)
        for i in range(n):
            acc.setdefault((i, i), 0.0)
        keys = sorted(acc)
        counts = np.bincount([i for i, _ in keys], minlength=n)
        offs = np.concatenate([[0], np.cumsum(counts)])
        return cls(
            n,
            offs,
            np.array([j for _, j in keys], dtype=np.int64),
            np.array([acc[k] for k in keys], dtype=np.float64),
        )


@dataclass(frozen=True)
class RowScaling:
    scales: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=np.float64)
        if np.any(s == 0):
            raise ParameterError("row scales must be nonzero")
        object.__setattr__(self, "scales", _frozen(s))

    def apply(self, b):
        """Scale a right-hand side the same way the matrix rows were scaled."""
        return as_vector(b, self.scales.size) * self.scales


def as_dense(a) -> DenseMatrix:
    if isinstance(a, DenseMatrix):
        return a
    if isinstance(a, SparseMatrix):
        return to_dense(a)
    return DenseMatrix(a)


def as_vector(v, n=None) -> np.ndarray:
    if np.ndim(v) > 1:
        raise ParameterError("expected a 1-D vector")
    arr = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    if n is not None and arr.size != n:
        raise ParameterError(f"vector has length {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("vector entries must be finite")
    return arr


def generate(n, kind="dense", density=1.0, seed=0):
    """Random strictly diagonally dominant test matrix.

    Off-diagonal entries are uniform on [-1, 1]; each diagonal entry is the
    absolute off-diagonal row sum plus one. Sparse matrices keep
    ``ceil(density * (n - 1))`` off-diagonal entries per row, at columns
    drawn without replacement.
    """
    n = int(n)
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0.0 < density <= 1.0:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    if kind == "dense":
        if density != 1.0:
            raise ParameterError("dense matrices require density=1")
        a = rng.uniform(-1.0, 1.0, size=(n, n))
        np.fill_diagonal(a, 0.0)
        np.fill_diagonal(a, np.abs(a).sum(axis=1) + 1.0)
        return DenseMatrix(a)
    if kind != "sparse":
        raise ParameterError(f"unknown matrix kind {kind!r}")

    per_row = math.ceil(density * (n - 1))
    entries = []
    for i in range(n):
        others = np.delete(np.arange(n), i)
        cols = np.sort(rng.choice(others, size=per_row, replace=False)) if per_row else others[:0]
        vals = rng.uniform(-1.0, 1.0, size=cols.size)
        entries.extend(zip([i] * cols.size, cols.tolist(), vals.tolist()))
        entries.append((i, i, float(np.abs(vals).sum()) + 1.0))
    return SparseMatrix.from_coordinates(n, entries)


def load_matrix_market(text: str | TextIO) -> SparseMatrix:
    """Parse ``coordinate real general`` Matrix Market data (1-based indices)."""
    lines = text.splitlines() if isinstance(text, str) else text.read().splitlines()
    if not lines:
        raise ParseError("empty input", 1)
    if lines[0].lower().split() != MM_HEADER.lower().split():
        raise ParseError(f"expected header {MM_HEADER!r}", 1)

    size = None
    entries = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if size is None:
            try:
                rows, cols, nnz = (int(p) for p in parts)
            except ValueError:
                raise ParseError("size line must be 'rows cols nnz'", lineno) from None
            if rows != cols:
                raise ParseError(f"matrix must be square, got {rows}x{cols}", lineno)
            if rows < 1 or nnz < 0:
                raise ParseError("invalid size line", lineno)
            size = (rows, nnz)
            continue
        if len(parts) != 3:
            raise ParseError("entry must be 'row col value'", lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"cannot parse entry {line!r}", lineno) from None
        n = size[0]
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"index ({i}, {j}) outside a {n}x{n} matrix", lineno)
        if not math.isfinite(v):
            raise ParseError("non-finite value", lineno)
        entries.append((i - 1, j - 1, v))

    if size is None:
        raise ParseError("missing size line", len(lines))
    if len(entries) != size[1]:
        raise ParseError(f"declared {size[1]} entries but found {len(entries)}", len(lines))
    return SparseMatrix.from_coordinates(size[0], entries)


def dump_matrix_market(m) -> str:
    """Emit a matrix as Matrix Market text; dense input emits its nonzeros."""
    if isinstance(m, SparseMatrix):
        n, coords = m.n, m.coordinates()
    else:
        vals = as_dense(m).values
        n = vals.shape[0]
        rows, cols = np.nonzero(vals)
        coords = [(int(i), int(j), float(vals[i, j])) for i, j in zip(rows, cols)]
    out = [MM_HEADER, f"{n} {n} {len(coords)}"]
    out += [f"{i + 1} {j + 1} {v!r}" for i, j, v in coords]
    return "\n".join(out) + "\n"


def to_dense(m: SparseMatrix) -> DenseMatrix:
    a = np.zeros((m.n, m.n))
    rows = np.repeat(np.arange(m.n), np.diff(m.row_offsets))
    a[rows, m.col_indices] = m.values
    return DenseMatrix(a)


def normalize_unit_diagonal(a):
    """Divide every row by its diagonal entry.

    Returns the scaled matrix (diagonal exactly 1.0) and the per-row scales
    ``1 / a_ii``. Solve the scaled system against ``scaling.apply(b)``.
    """
    vals = as_dense(a).values
    diag = np.diag(vals)
    zero = np.flatnonzero(diag == 0)
    if zero.size:
        raise SingularDiagonalError(int(zero[0]))
    out = vals / diag[:, None]
    np.fill_diagonal(out, 1.0)
    return DenseMatrix(out), RowScaling(1.0 / diag)


def residual_inf(a, x, b) -> float:
    """Return max_i |(A x - b)_i|."""
    vals = as_dense(a).values
    n = vals.shape[0]
    x = as_vector(x)
    b = as_vector(b)
    if x.size != n or b.size != n:
        raise ParameterError(f"dimension mismatch: A is {n}x{n}, x has {x.size}, b has {b.size}")
    return float(np.max(np.abs(vals @ x - b)))
