import numpy as np
import pytest

from orlicz_lab.domain_field import build_grid


@pytest.fixture(scope="session")
def unit_interval():
    return build_grid([(0.0, 1.0)], 1000)


@pytest.fixture(scope="session")
def fine_interval():
    return build_grid([(0.0, 1.0)], 10_000)


@pytest.fixture(scope="session")
def unit_square():
    return build_grid([(0.0, 1.0), (0.0, 1.0)], 50)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(ok, detail)``; returns ``ok``."""

    def record(ok, detail=""):
        _ACCEPTANCE.append((request.node.name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
