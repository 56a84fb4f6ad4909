import numpy as np
import pytest

from ebvlu.bench import (
    CSV_COLUMNS,
    BenchConfig,
    BenchReport,
    BenchRow,
    emit_report,
    parse_csv_report,
    run_bench,
)
from ebvlu.cli import main
from ebvlu.errors import MemoryBudgetError, ParameterError
from ebvlu.matrix import MM_HEADER, dump_matrix_market, generate

HEADER = ",".join(CSV_COLUMNS)


def row(size, workers, **kw):
    base = dict(kind="dense", t_seq=0.001, t_par=0.001, residual=1e-14, madds=10)
    base.update(kw)
    return BenchRow(size, base["kind"], workers, base["t_seq"], base["t_par"], base["residual"], base["madds"])


class TestEmit:
    def test_empty_csv(self):
        assert emit_report(BenchReport(), "csv") == HEADER + "\n"

    def test_empty_markdown(self):
        lines = emit_report(BenchReport(), "md").splitlines()
        assert lines[0] == "| " + " | ".join(CSV_COLUMNS) + " |"
        assert len(lines) == 2

    def test_single_row(self):
        text = emit_report(BenchReport([row(64, 1)]), "csv")
        lines = text.splitlines()
        assert lines[0] == HEADER
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert len(fields) == 8
        assert fields[:6] == ["64", "dense", "1", "0.001", "0.001", "1"]

    def test_size_major_order(self):
        report = BenchReport([row(512, 4), row(256, 4), row(512, 1), row(256, 1)])
        parsed = parse_csv_report(emit_report(report, "csv"))
        assert [(r["size"], r["workers"]) for r in parsed] == [(256, 1), (256, 4), (512, 1), (512, 4)]

    def test_six_significant_digits(self):
        text = emit_report(BenchReport([row(8, 1, t_seq=1 / 3, t_par=2 / 3)]), "csv")
        fields = text.splitlines()[1].split(",")
        assert fields[3:6] == ["0.333333", "0.666667", "0.5"]

    def test_markdown_rows(self):
        lines = emit_report(BenchReport([row(8, 1), row(8, 2)]), "md").splitlines()
        assert len(lines) == 4
        assert all(line.startswith("| 8 | dense |") for line in lines[2:])

    def test_error_row(self):
        r = BenchRow(8, "dense", 1, float("nan"), float("nan"), float("nan"), 0, "SingularPivotError: x")
        parsed = parse_csv_report(emit_report(BenchReport([r]), "csv"))
        assert parsed[0]["residual"].startswith("error")

    def test_unknown_format(self):
        with pytest.raises(ParameterError):
            emit_report(BenchReport(), "json")


class TestRunBench:
    def test_self_consistency_single_worker(self):
        # Wall-clock ratio on a shared machine: re-measure before declaring failure.
        speedups = []
        for _ in range(3):
            report = run_bench(BenchConfig(sizes=[64], workers=[1], repetitions=3))
            assert len(report.rows) == 1
            speedups.append(report.rows[0].speedup)
            if 0.5 <= speedups[-1] <= 2.0:
                break
        assert 0.5 <= speedups[-1] <= 2.0, speedups

    def test_residual_check(self):
        report = run_bench(BenchConfig(sizes=[40, 90], workers=[1, 3], repetitions=1, check=True))
        assert report.ok
        for r in report.rows:
            a = generate(r.size, seed=0)
            assert r.residual <= 1e-9 * r.size * a.norm_inf()

    def test_row_count_collapses_seeds(self):
        cfg = BenchConfig(sizes=[12, 20], workers=[1, 2, 3], seeds=[0, 1, 2], repetitions=1)
        assert len(run_bench(cfg).rows) == 6

    def test_reproducible_non_timing_fields(self):
        cfg = dict(sizes=[30], kind="sparse", density=0.1, workers=[1, 2], seeds=[4, 5], repetitions=1)
        a = run_bench(BenchConfig(**cfg))
        b = run_bench(BenchConfig(**cfg))
        key = lambda r: (r.size, r.kind, r.workers, r.residual, r.madds)  # noqa: E731
        assert [key(r) for r in a.rows] == [key(r) for r in b.rows]
        dense_madds = sum((30 - k) ** 2 for k in range(1, 30)) + 30 * 29
        assert all(r.madds < dense_madds for r in a.rows)

    def test_csv_round_trip(self):
        report = run_bench(BenchConfig(sizes=[16, 24], workers=[1, 2], repetitions=1))
        parsed = parse_csv_report(emit_report(report, "csv"))
        for r, p in zip(sorted(report.rows, key=lambda r: (r.size, r.workers)), parsed):
            assert (p["size"], p["kind"], p["workers"], p["madds"]) == (r.size, r.kind, r.workers, r.madds)
            assert np.float64(p["residual"]).view(np.int64) == np.float64(r.residual).view(np.int64)
            assert p["speedup"] == pytest.approx(p["t_seq_s"] / p["t_par_s"], rel=1e-5)

    def test_memory_refusal(self):
        with pytest.raises(MemoryBudgetError, match="bytes"):
            run_bench(BenchConfig(sizes=[1000], workers=[1], memory_limit=1000))

    def test_singular_matrix_marks_rows(self):
        cfg = BenchConfig(matrix=[[0.0, 1.0], [1.0, 1.0]], workers=[1], repetitions=1)
        report = run_bench(cfg)
        assert not report.ok
        assert "SingularPivotError" in report.rows[0].error

    @pytest.mark.parametrize(
        "kw",
        [dict(sizes=[1]), dict(workers=[0]), dict(repetitions=0), dict(kind="banded"), dict(seeds=[])],
    )
    def test_invalid_config(self, kw):
        with pytest.raises(ParameterError):
            BenchConfig(**kw)


class TestCli:
    def test_csv_to_stdout(self, capsys):
        code = main(["--sizes", "16,24", "--workers", "1,2", "--reps", "1", "--check"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.splitlines()[0] == HEADER
        assert len(parse_csv_report(out)) == 4

    def test_markdown_to_file(self, tmp_path):
        out = tmp_path / "report.md"
        code = main(["--sizes", "16", "--workers", "2", "--reps", "1", "--format", "md", "--out", str(out)])
        assert code == 0
        assert out.read_text().startswith("| size |")

    def test_sparse_kind(self, capsys):
        code = main(["--sizes", "40", "--kind", "sparse", "--density", "0.1", "--workers", "2", "--reps", "1"])
        assert code == 0
        assert parse_csv_report(capsys.readouterr().out)[0]["kind"] == "sparse"

    def test_matrix_file(self, tmp_path, capsys):
        path = tmp_path / "a.mtx"
        path.write_text(dump_matrix_market(generate(12, "sparse", 0.2, seed=1)))
        code = main(["--matrix", str(path), "--workers", "1,3", "--reps", "1", "--check"])
        parsed = parse_csv_report(capsys.readouterr().out)
        assert code == 0
        assert [(p["size"], p["kind"], p["workers"]) for p in parsed] == [(12, "file", 1), (12, "file", 3)]

    def test_row_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "singular.mtx"
        path.write_text(f"{MM_HEADER}\n2 2 3\n1 2 1.0\n2 1 1.0\n2 2 1.0\n")
        assert main(["--matrix", str(path), "--workers", "1", "--reps", "1"]) == 1

    @pytest.mark.parametrize(
        "argv",
        [
            ["--sizes", "1"],
            ["--sizes", "a,b"],
            ["--format", "json"],
            ["--workers", "0"],
            ["--matrix", "/nonexistent/file.mtx"],
        ],
    )
    def test_config_errors(self, argv, capsys):
        try:
            code = main(argv + ["--reps", "1"])
        except SystemExit as exc:
            code = exc.code
        assert code == 2

    def test_bad_matrix_file(self, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text("not a matrix\n")
        assert main(["--matrix", str(path)]) == 2
