"""Step-synchronous parallel factorization and triangular solves.

Workers are threads; the numeric kernels are compiled with ``nogil`` so
they run concurrently. Entry ownership comes from the plan:

* entry (i, j) with i >= j belongs to the owner of column j (its L vector,
  or for j = n-1 the pivot owner),
* entry (i, j) with i < j belongs to the owner of row i's U vector.

Every entry is written by exactly one worker and sees the same sequence of
floating-point operations as in :func:`ebvlu.lu.factorize_seq`, so the
results are bitwise identical for any worker count. During factorization
the working copy keeps its columns grouped by owner so that each worker
sweeps contiguous memory; the permutation is undone before returning.
"""
from __future__ import annotations

import os
import threading
import weakref
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ParameterError, SingularPivotError
from .lu import LUFactors, PivotPolicy, _check_pivots
from .matrix import as_dense, as_vector
from .plan import EbvPlan, make_plan


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass(frozen=True)
class ExecConfig:
    workers: int = field(default_factory=default_workers)
    policy: PivotPolicy | None = None
    zero_skip: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise ParameterError(f"need at least one worker, got {self.workers}")


@dataclass
class WorkCounters:
    madds: list[int]
    divs: list[int]
    barriers: int = 0
    # multiply-adds per pass ("forward"/"backward") for the solve phase
    by_pass: dict[str, int] = field(default_factory=dict)

    @classmethod
    def zeros(cls, workers):
        return cls([0] * workers, [0] * workers)

    @property
    def total_madds(self) -> int:
        return sum(self.madds)

    @property
    def total_divs(self) -> int:
        return sum(self.divs)

    def to_csv(self) -> str:
        lines = ["worker,madds,divs"]
        lines += [f"{w},{m},{d}" for w, (m, d) in enumerate(zip(self.madds, self.divs))]
        return "\n".join(lines) + "\n"


@njit(nogil=True, cache=True)
def _scale_column(a, r, c, threshold):
    # Phase 1 of step r on storage column c; returns False on a singular pivot.
    p = a[r, c]
    if abs(p) <= threshold:
        return False
    for i in range(r + 1, a.shape[0]):
        a[i, c] = a[i, c] / p
    return True


@njit(nogil=True, cache=True)
def _update_owned(a, r, c, w, starts, below, row_owner, zero_skip):
    # Rank-1 update of step r restricted to worker w's entries; returns madds.
    # Columns are stored grouped by owner: group g occupies storage columns
    # starts[g]:starts[g+1] in ascending original order, and below[g, x] counts
    # the group's columns with original index < x. c is the storage column of r.
    n = a.shape[0]
    groups = starts.size - 1
    first = starts[w] + below[w, r + 1]
    madds = 0
    for i in range(r + 1, n):
        li = a[i, c]
        if zero_skip and li == 0.0:
            continue
        upper = row_owner[i] == w
        # L part: own columns in (r, i]; for an owned row run on through the U part
        hi = starts[w + 1] if upper else starts[w] + below[w, i + 1]
        for p in range(first, hi):
            a[i, p] = a[i, p] - li * a[r, p]
        madds += hi - first
        if upper:
            for g in range(groups):
                if g == w:
                    continue
                lo = starts[g] + below[g, i + 1]
                hi = starts[g + 1]
                for p in range(lo, hi):
                    a[i, p] = a[i, p] - li * a[r, p]
                madds += hi - lo
    return madds


_layouts: "weakref.WeakKeyDictionary[EbvPlan, tuple]" = weakref.WeakKeyDictionary()


def _grouped_layout(plan):
    """Column permutation grouping columns by owner, plus lookup tables (cached per plan)."""
    if plan in _layouts:
        return _layouts[plan]
    col_owner, workers = plan.column_owner, plan.workers
    n = col_owner.size
    order = np.argsort(col_owner, kind="stable")
    where = np.empty(n, dtype=np.int64)
    where[order] = np.arange(n)
    starts = np.searchsorted(col_owner[order], np.arange(workers + 1)).astype(np.int64)
    below = np.zeros((workers, n + 1), dtype=np.int64)
    for g in range(workers):
        below[g, 1:] = np.cumsum(col_owner == g)
    _layouts[plan] = layout = (order, where.tolist(), starts, below)
    return layout


class _Shared:
    """State visible to all workers of one call."""

    def __init__(self, workers):
        self.barrier = threading.Barrier(workers)
        self.solo = workers == 1
        self.crossings = 0
        self.error = None
        self.crash = None

    def wait(self, w):
        # A one-party barrier only needs counting.
        if not self.solo:
            self.barrier.wait()
        if w == 0:
            self.crossings += 1


def _run(workers, target, barriers_done):
    shared = _Shared(workers)

    def body(w):
        try:
            target(w, shared)
        except threading.BrokenBarrierError:
            pass
        except BaseException as exc:  # re-raised in the caller
            shared.crash = exc
            shared.barrier.abort()

    threads = [threading.Thread(target=body, args=(w,), daemon=True) for w in range(1, workers)]
    for t in threads:
        t.start()
    body(0)
    for t in threads:
        t.join()
    barriers_done(shared.crossings)
    if shared.crash is not None:
        raise shared.crash
    if shared.error is not None:
        raise shared.error


def resolve_plan(n, plan: EbvPlan | None, cfg: ExecConfig) -> EbvPlan:
    if plan is None:
        return make_plan(n, cfg.workers)
    if plan.n != n:
        raise ParameterError(f"plan is for n={plan.n} but the matrix has n={n}")
    if plan.workers != min(cfg.workers, n - 1):
        raise ParameterError(
            f"plan distributes over {plan.workers} workers but the config asks for {cfg.workers}"
        )
    return plan


def factorize_par(a, plan: EbvPlan | None = None, cfg: ExecConfig | None = None):
    """Parallel counterpart of ``factorize_seq``; returns ``(LUFactors, WorkCounters)``."""
    a = as_dense(a)
    n = a.n
    if n < 2:
        raise ParameterError("parallel factorization needs n >= 2")
    cfg = cfg or ExecConfig()
    plan = resolve_plan(n, plan, cfg)
    threshold = (cfg.policy or PivotPolicy.default_for(a)).threshold
    W = plan.workers
    row_owner = plan.row_owner
    col_owner = plan.column_owner.tolist()
    order, where, starts, below = _grouped_layout(plan)
    work = np.ascontiguousarray(a.values[:, order])
    counters = WorkCounters.zeros(W)

    def worker(w, shared):
        wait = shared.wait
        madds = divs = 0
        try:
            for r in range(n - 1):
                c = where[r]
                if col_owner[r] == w:
                    if _scale_column(work, r, c, threshold):
                        divs += n - r - 1
                    else:
                        shared.error = SingularPivotError(r + 1, work[r, c], threshold)
                wait(w)
                if shared.error is not None:
                    return
                madds += _update_owned(
                    work, r, c, w, starts, below, row_owner, cfg.zero_skip
                )
                wait(w)
        finally:
            counters.madds[w] = madds
            counters.divs[w] = divs

    _run(W, worker, lambda k: setattr(counters, "barriers", k))
    work = work[:, where]
    if abs(work[n - 1, n - 1]) <= threshold:
        raise SingularPivotError(n, work[n - 1, n - 1], threshold)
    return LUFactors(work, threshold), counters


def solve_par(f: LUFactors, b, plan: EbvPlan | None = None, cfg: ExecConfig | None = None):
    """Forward then backward substitution distributed by vector ownership.

    Step k of the forward pass applies the L vector of column k and is done
    by that vector's owner; step k of the backward pass finishes unknown k
    using the U vector of row k. The last unknown has no U vector and is
    finished by the owner of the last pivot. Returns ``(x, WorkCounters)``.
    """
    n = f.n
    if n < 2:
        raise ParameterError("parallel solve needs n >= 2")
    cfg = cfg or ExecConfig()
    plan = resolve_plan(n, plan, cfg)
    _check_pivots(f)
    x = as_vector(b, n)
    P = f.packed
    col_owner = plan.column_owner.tolist()
    row_owner = plan.row_owner.tolist()
    W = plan.workers
    counters = WorkCounters.zeros(W)

    fwd = [0] * W

    def worker(w, shared):
        wait = shared.wait
        madds = divs = 0
        try:
            for k in range(n - 1):
                if col_owner[k] == w:
                    x[k + 1:] -= P[k + 1:, k] * x[k]
                    madds += n - k - 1
                wait(w)
            fwd[w] = madds
            for k in range(n - 1, -1, -1):
                owner = row_owner[k] if k < n - 1 else col_owner[k]
                if owner == w:
                    x[k] = (x[k] - P[k, k + 1:] @ x[k + 1:]) / P[k, k]
                    madds += n - k - 1
                    divs += 1
                if k:
                    wait(w)
        finally:
            counters.madds[w] = madds
            counters.divs[w] = divs

    _run(W, worker, lambda k: setattr(counters, "barriers", k))
    counters.by_pass = {"forward": sum(fwd), "backward": counters.total_madds - sum(fwd)}
    return x, counters


def solve_system_par(a, b, workers=None, zero_skip=False, policy=None):
    """Factor and solve ``a x = b`` with an EbV plan; returns ``(x, WorkCounters)``."""
    a = as_dense(a)
    cfg = ExecConfig(workers or default_workers(), policy, zero_skip)
    plan = make_plan(a.n, cfg.workers)
    f, fc = factorize_par(a, plan, cfg)
    x, sc = solve_par(f, b, plan, cfg)
    merged = WorkCounters(
        [p + q for p, q in zip(fc.madds, sc.madds)],
        [p + q for p, q in zip(fc.divs, sc.divs)],
        fc.barriers + sc.barriers,
    )
    return x, merged
