"""Benchmark sweep comparing the sequential and EbV-parallel solvers."""
from __future__ import annotations

import csv
import io
import logging
import os
import statistics
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import MemoryBudgetError, ParameterError
from .lu import solve_seq
from .matrix import DenseMatrix, as_dense, generate, residual_inf
from .parallel import ExecConfig, default_workers, factorize_par, solve_par
from .plan import make_plan

log = logging.getLogger(__name__)

CSV_COLUMNS = ("size", "kind", "workers", "t_seq_s", "t_par_s", "speedup", "residual", "madds")
DEFAULT_SIZES = (256, 512, 1024, 2048)
# A, the sequential and parallel working copies, and their factors.
_COPIES_PER_SYSTEM = 5


@dataclass
class BenchConfig:
    sizes: list[int] = field(default_factory=lambda: list(DEFAULT_SIZES))
    kind: str = "dense"
    density: float | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    workers: list[int] = field(default_factory=lambda: [default_workers()])
    repetitions: int = 5
    fmt: str = "csv"
    check: bool = False
    matrix: DenseMatrix | None = None
    memory_limit: int | None = None

    def __post_init__(self):
        if self.kind not in ("dense", "sparse"):
            raise ParameterError(f"kind must be dense or sparse, got {self.kind!r}")
        if self.density is None:
            self.density = 1.0 if self.kind == "dense" else 0.1
        if self.matrix is not None:
            self.matrix = as_dense(self.matrix)
            self.sizes = [self.matrix.n]
        if not self.sizes or any(n < 2 for n in self.sizes):
            raise ParameterError("all sizes must be >= 2")
        if not self.workers or any(w < 1 for w in self.workers):
            raise ParameterError("worker counts must be >= 1")
        if not self.seeds:
            raise ParameterError("need at least one seed")
        if self.repetitions < 1:
            raise ParameterError("repetitions must be >= 1")
        if self.fmt not in ("csv", "md"):
            raise ParameterError(f"format must be csv or md, got {self.fmt!r}")


@dataclass
class BenchRow:
    size: int
    kind: str
    workers: int
    t_seq: float
    t_par: float
    residual: float
    madds: int
    error: str | None = None

    @property
    def speedup(self) -> float:
        if self.error or not self.t_par:
            return float("nan")
        return self.t_seq / self.t_par


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    environment: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.error is None for r in self.rows)


def available_memory() -> int | None:
    try:
        return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return None


def required_bytes(n) -> int:
    return _COPIES_PER_SYSTEM * 8 * n * n


def _median_time(fn, reps):
    times = []
    out = None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def _warm_up():
    a = generate(4, seed=0)
    b = a.values.sum(axis=1)
    solve_seq(a, b)
    cfg = ExecConfig(2)
    f, _ = factorize_par(a, cfg=cfg)
    solve_par(f, b, cfg=cfg)


def _systems(cfg, n):
    if cfg.matrix is not None:
        yield cfg.matrix
        return
    for seed in cfg.seeds:
        yield as_dense(generate(n, cfg.kind, cfg.density, seed))


def run_bench(cfg: BenchConfig) -> BenchReport:
    need = required_bytes(max(cfg.sizes))
    limit = cfg.memory_limit if cfg.memory_limit is not None else available_memory()
    if limit is not None and need > limit:
        raise MemoryBudgetError(need, limit)

    _warm_up()
    kind = "file" if cfg.matrix is not None else cfg.kind
    report = BenchReport(
        environment={
            "workers_available": default_workers(),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
    )
    for n in sorted(set(cfg.sizes)):
        per_w = {w: {"t_seq": [], "t_par": [], "res": [], "madds": [], "error": None} for w in cfg.workers}
        for a in _systems(cfg, n):
            b = a.values @ np.ones(n)
            bound = 1e-9 * n * a.norm_inf()
            try:
                t_seq, _ = _median_time(lambda: solve_seq(a, b), cfg.repetitions)
            except Exception as exc:
                for acc in per_w.values():
                    acc["error"] = f"{type(exc).__name__}: {exc}"
                continue
            for w in cfg.workers:
                acc = per_w[w]
                ecfg = ExecConfig(w, zero_skip=cfg.kind == "sparse")
                plan = make_plan(n, w)

                def par():
                    f, fc = factorize_par(a, plan, ecfg)
                    x, sc = solve_par(f, b, plan, ecfg)
                    return x, fc.total_madds + sc.total_madds

                try:
                    t_par, (x, madds) = _median_time(par, cfg.repetitions)
                except Exception as exc:
                    acc["error"] = f"{type(exc).__name__}: {exc}"
                    continue
                res = residual_inf(a, x, b)
                if cfg.check and not res <= bound:
                    acc["error"] = f"residual {res:.3e} exceeds bound {bound:.3e}"
                acc["t_seq"].append(t_seq)
                acc["t_par"].append(t_par)
                acc["res"].append(res)
                acc["madds"].append(madds)
                log.info("n=%d W=%d t_seq=%.4g t_par=%.4g residual=%.3e", n, w, t_seq, t_par, res)

        for w in sorted(cfg.workers):
            acc = per_w[w]
            if acc["t_par"]:
                row = BenchRow(
                    n, kind, w,
                    statistics.median(acc["t_seq"]),
                    statistics.median(acc["t_par"]),
                    max(acc["res"]),
                    max(acc["madds"]),
                    acc["error"],
                )
            else:
                row = BenchRow(n, kind, w, float("nan"), float("nan"), float("nan"), 0, acc["error"])
            report.rows.append(row)
    return report


def _fmt6(v):
    return f"{v:.6g}"


def _fields(row: BenchRow):
    residual = repr(row.residual) if row.error is None else f"error: {row.error}"
    return [
        str(row.size), row.kind, str(row.workers),
        _fmt6(row.t_seq), _fmt6(row.t_par), _fmt6(row.speedup),
        residual, str(row.madds),
    ]


def emit_report(report: BenchReport, fmt: str = "csv") -> str:
    """Render rows sorted by size then worker count.

    Timings and speedup carry 6 significant digits; the residual is written
    with full round-trip precision. Failed rows put the error message in the
    residual column.
    """
    rows = sorted(report.rows, key=lambda r: (r.size, r.workers))
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(_fields(r) for r in rows)
        return buf.getvalue()
    if fmt in ("md", "markdown"):
        lines = ["| " + " | ".join(CSV_COLUMNS) + " |", "|" + "---|" * len(CSV_COLUMNS)]
        lines += ["| " + " | ".join(f.replace("|", "\\|") for f in _fields(r)) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ParameterError(f"unknown report format {fmt!r}")


def parse_csv_report(text: str) -> list[dict]:
    """Read back a CSV report; numeric fields are converted, error rows keep the message."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {
            "size": int(rec["size"]),
            "kind": rec["kind"],
            "workers": int(rec["workers"]),
            "t_seq_s": float(rec["t_seq_s"]),
            "t_par_s": float(rec["t_par_s"]),
            "speedup": float(rec["speedup"]),
            "madds": int(rec["madds"]),
        }
        res = rec["residual"]
        row["residual"] = res if res.startswith("error") else float(res)
        out.append(row)
    return out
