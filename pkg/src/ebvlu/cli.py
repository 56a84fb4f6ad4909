"""``ebvlu-bench``: sweep sizes and worker counts, print a speedup table."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import DEFAULT_SIZES, BenchConfig, emit_report, run_bench
from .errors import MemoryBudgetError, ParameterError, ParseError
from .matrix import load_matrix_market
from .parallel import default_workers

EXIT_OK, EXIT_ROW_ERROR, EXIT_CONFIG = 0, 1, 2


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser():
    p = argparse.ArgumentParser(prog="ebvlu-bench", description=__doc__)
    p.add_argument("--sizes", type=_int_list, default=list(DEFAULT_SIZES))
    p.add_argument("--kind", choices=("dense", "sparse"), default="dense")
    p.add_argument("--density", type=float, default=None,
                   help="off-diagonal fill for sparse matrices (default 0.1)")
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--workers", type=_int_list, default=None,
                   help=f"worker counts to sweep (default {default_workers()})")
    p.add_argument("--reps", type=int, default=5, help="timing repetitions, median is reported")
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--check", action="store_true", help="fail rows whose residual exceeds 1e-9*n*||A||")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--matrix", type=Path, default=None,
                   help="Matrix Market file to benchmark instead of generated systems")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        matrix = None
        if args.matrix is not None:
            matrix = load_matrix_market(args.matrix.read_text())
        cfg = BenchConfig(
            sizes=args.sizes,
            kind=args.kind,
            density=args.density,
            seeds=args.seeds,
            workers=args.workers or [default_workers()],
            repetitions=args.reps,
            fmt=args.format,
            check=args.check,
            matrix=matrix,
        )
        report = run_bench(cfg)
    except (ParameterError, ParseError, MemoryBudgetError, OSError) as exc:
        print(f"ebvlu-bench: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    text = emit_report(report, cfg.fmt)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    env = report.environment
    print(f"# workers available: {env['workers_available']}, run at {env['timestamp']}",
          file=sys.stderr)
    for row in report.rows:
        if row.error:
            print(f"ebvlu-bench: n={row.size} W={row.workers}: {row.error}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_ROW_ERROR


if __name__ == "__main__":
    sys.exit(main())
