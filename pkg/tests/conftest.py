import numpy as np
import pytest

from ramansim.pulse import DoubleBlobSpec, GridSpec, make_double_blob, to_time
from ramansim.solver import SimConfig


@pytest.fixture(scope="session")
def grid():
    return GridSpec()


@pytest.fixture(scope="session")
def blob_pump(grid):
    return to_time(make_double_blob(DoubleBlobSpec(), grid))


@pytest.fixture(scope="session")
def default_cfg():
    return SimConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.criterion_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(config.criterion_lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
