import numpy as np
import pytest

from schatten_fields.base import Grid
from schatten_fields.sampling import make_rng


@pytest.fixture
def grid16():
    return Grid.interval(0.0, 1.0, 16)


@pytest.fixture
def grid3():
    return Grid.from_points([[-1.0], [0.5], [1.0]], adjacency=[[0, 1], [1, 2]])


@pytest.fixture
def rng():
    return make_rng(1234)


def assert_fields_close(a, b, atol):
    np.testing.assert_allclose(np.asarray(a.values), np.asarray(b.values), rtol=0, atol=atol)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
