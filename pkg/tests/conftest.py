import numpy as np
import pytest

from relupat import DecisionPattern, figure1_network

FIG4A = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [4.0, 3.0], [1.0, -1.0]])


@pytest.fixture
def fig1():
    return figure1_network()


@pytest.fixture
def wedge():
    return DecisionPattern({(1, 0): "on", (1, 1): "off"})


@pytest.fixture
def rng():
    return np.random.default_rng(42)


ACCEPTANCE = []


def report(number: int, ok: bool, detail: str = ""):
    """Record and print one acceptance line."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
