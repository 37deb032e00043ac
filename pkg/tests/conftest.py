import numpy as np
import pytest

from bandedge.reservoir import ReservoirSpec

_ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store a one-line verdict for the acceptance summary."""

    def record(number, ok, detail):
        _ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def one_band():
    return ReservoirSpec.one_band(2.0, 1.0, 1.0)


@pytest.fixture
def two_band():
    return ReservoirSpec.two_band(1.0, 2.0, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
