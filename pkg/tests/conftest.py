import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from jointlp import channel, ldpc  # noqa: E402

# the running example: SPC(3,2) on the dicode channel, starting in state 0
FIG2_TCW = np.array([[0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float)
FIG2_PCW = np.array([[0, 1, 0, 0], [0, 0, .5, .5], [.5, 0, .5, 0]], dtype=float)


@pytest.fixture
def spc3():
    return ldpc.spc(3)


@pytest.fixture
def dic3():
    return channel.build_trellis(channel.get_channel("dic"), 3)


@pytest.fixture
def dic3_s0():
    return channel.build_trellis(channel.get_channel("dic").with_start_state(0), 3)


@pytest.fixture(scope="session")
def code8():
    return ldpc.random_regular(8, 3, 4, seed=0, allow_4cycles=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_configure(config):
    config.acceptance_lines = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
