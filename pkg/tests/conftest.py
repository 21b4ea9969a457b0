from __future__ import annotations

import numpy as np
import pytest

from core.grid import Grid, GridFunction
from core.system import builtin_system


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size pipeline runs")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def grid() -> Grid:
    return Grid(h=2.0 ** -4, n_points=256)


@pytest.fixture
def euler():
    return builtin_system("euler")


@pytest.fixture
def gaussian_on(grid):
    def make(g: Grid = grid, width: float = 1.0, center: float = 0.0) -> GridFunction:
        return GridFunction.from_function(g, lambda x: np.exp(-0.5 * ((x - center) / width) ** 2))

    return make


@pytest.fixture
def random_function(rng):
    def make(g: Grid, complex_values: bool = True) -> GridFunction:
        v = rng.standard_normal(g.n_points)
        if complex_values:
            v = v + 1j * rng.standard_normal(g.n_points)
        return GridFunction(g, v)

    return make
