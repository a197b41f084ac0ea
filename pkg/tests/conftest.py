import numpy as np
import pytest

from bepdyn.game import make_matrix_game


@pytest.fixture
def counterexample_game():
    """Three actions; a* is S(2)-stable although a'' spoils in its own favour."""
    return make_matrix_game(["a*", "a'", "a''"], [[8, 9, 3], [7, 5, 2], [6, 4, 1]])


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def _report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
