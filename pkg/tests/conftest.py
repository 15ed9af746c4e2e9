import numpy as np
import pytest

from hybrid_doa import ArrayConfig
from oracles import ACCEPTANCE_LINES


@pytest.fixture
def array_1024():
    """N=1024, M=8, K=128 with a 32-subarray Root-MUSIC part."""
    return ArrayConfig(1024, 8, 128, 0.5, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
