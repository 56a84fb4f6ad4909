import re

import numpy as np
import pytest

_criteria = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        outcome = report.outcome.upper()
        if report.outcome == "skipped" and isinstance(report.longrepr, tuple):
            outcome += f" ({report.longrepr[2].removeprefix('Skipped: ')})"
        _criteria[key] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), outcome in sorted(_criteria.items()):
        terminalreporter.write_line(f"criterion {num} [{name}]: {outcome}")


@pytest.fixture
def bits():
    """View a float array as raw 64-bit patterns for bitwise comparison."""
    return lambda arr: np.ascontiguousarray(arr, dtype=np.float64).view(np.int64)
