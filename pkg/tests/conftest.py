import numpy as np
import pytest

from obkm.grid import Grid, SymTensorField
from obkm.inequalities import RandomFieldSpec, random_field


@pytest.fixture(scope="session")
def grid16():
    return Grid(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32)


def random_sym(grid, seed=0, amplitude=1.0, band_limit=None):
    """Band-limited random symmetric stress."""
    spec = RandomFieldSpec(seed=seed, band_limit=band_limit, amplitude=amplitude, rank="sym_tensor")
    return random_field(grid, spec)


def sin_x1(grid, amplitude=1.0):
    x = grid.mesh()[0]
    return amplitude * np.sin(x) * np.ones(grid.shape)


def sym_from(grid, **components):
    """``SymTensorField`` with named packed components (s11, s22, s33, s12, s13, s23)."""
    names = ("s11", "s22", "s33", "s12", "s13", "s23")
    values = np.zeros((6, *grid.shape))
    for key, arr in components.items():
        values[names.index(key)] = arr
    return SymTensorField(grid, values)


# acceptance criteria report one PASS/FAIL line each at the end of the session
_criteria: dict[int, tuple[str, bool]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    _criteria[number] = (title, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2} {title}: {'PASS' if ok else 'FAIL'}")
