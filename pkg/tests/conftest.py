import json
from pathlib import Path

import numpy as np
import pytest

from inhchannel import kernels

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20160523)


@pytest.fixture(params=["numba", "numpy"])
def kernel_path(request, monkeypatch):
    """Run the test once per kernel implementation."""
    if request.param == "numba" and not kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    monkeypatch.setattr(kernels, "USE_NUMBA", request.param == "numba")
    return request.param


@pytest.fixture(scope="session")
def golden_evaluations():
    return json.loads((DATA / "golden_evaluations.json").read_text())["cases"]


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture(scope="session")
def warm_kernels():
    """Trigger JIT compilation once so runtime budgets measure steady-state work."""
    p = np.array([[0.0, 0.0]])
    kernels.crossing_matrix(p, p + 1.0, np.array([[0.0, 1.0, 1.0, 0.0]]))
    D = np.linspace(0.0, 10.0, 8)
    ones = np.ones((8, 1))
    kernels.scan_breakpoints(D, D, ones, ones, np.zeros((8, 0)), np.array([5.0]))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
