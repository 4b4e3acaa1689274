import numpy as np
import pytest

from flemingviot.chain import RateMatrix


@pytest.fixture
def two_point_q():
    # a = 1, b = 2, p0 = (0, 3)
    return RateMatrix([[0.0, 1.0], [2.0, 0.0]], [0.0, 3.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)
