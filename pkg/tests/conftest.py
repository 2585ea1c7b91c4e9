import numpy as np
import pytest

from mhdlab.fields import Grid, ScalarField, VectorField, leray_project, random_bandlimited
from mhdlab.solver import State

# (criterion, part, passed, detail) recorded by the acceptance tests
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted({c for c, *_ in ACCEPTANCE}):
        parts = [(name, ok, detail) for c, name, ok, detail in ACCEPTANCE if c == crit]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        tr.write_line(f"criterion {crit:2d}: {verdict}")
        for name, ok, detail in parts:
            tr.write_line(f"    {'ok  ' if ok else 'FAIL'} {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def grid32():
    return Grid(32)


@pytest.fixture
def unit_grid():
    return Grid(16, 1.0)


def taylor_green(grid, a=1.0):
    return VectorField.from_components(
        grid,
        lambda x, y, z: a * np.sin(x) * np.cos(y) * np.cos(z),
        lambda x, y, z: -a * np.cos(x) * np.sin(y) * np.cos(z),
        lambda x, y, z: 0 * x,
    )


def cross_field(grid, b=0.5):
    return VectorField.from_components(
        grid,
        lambda x, y, z: b * np.sin(z),
        lambda x, y, z: b * np.sin(x),
        lambda x, y, z: b * np.sin(y),
    )


def random_solenoidal(grid, rng, kmax=4.0):
    return leray_project(VectorField(grid, random_bandlimited(grid, rng, kmax, components=3)))


def tg_state(grid, rho=None, a=1.0, b=0.5, theta=1.0):
    rho = np.ones(grid.shape) if rho is None else rho
    return State(
        rho=ScalarField(grid, rho),
        u=taylor_green(grid, a),
        H=cross_field(grid, b),
        theta=ScalarField(grid, np.full(grid.shape, theta)),
    )
