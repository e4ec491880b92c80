import numpy as np
import pytest

from afbm import AfbmModem, design_config

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_recorder():
    """Collects one verdict line per acceptance check; the lines are
    echoed in the terminal summary so they survive output capture."""
    def record(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance checks")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy_modem():
    """Smallest waveform that exercises every stage (L=8, K=2, N=16)."""
    return AfbmModem(design_config(8, 2, 16, 12, "hermite"))


@pytest.fixture(scope="session")
def mid_hermite():
    return AfbmModem(design_config(64, 8, 128, 96, "hermite"))


@pytest.fixture(scope="session")
def mid_phydyas():
    return AfbmModem(design_config(64, 8, 128, 96, "phydyas"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
