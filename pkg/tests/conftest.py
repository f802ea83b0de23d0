import numpy as np
import pytest

from macpix.pixel import PixelConfig

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def cfg():
    return PixelConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
