"""Shared fixtures.

Plans carry the kernel tables, which dominate setup cost, so the grids
used across many tests are session-scoped.  Nothing here mutates state:
fields are immutable value objects and plans only grow caches.
"""

import numpy as np
import pytest

from landaukit.spectral import Field, GridSpec, get_plan
from landaukit.solver import maxwellian


@pytest.fixture(scope="session")
def grid8():
    return GridSpec(8, 4.0)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16, 8.0)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32, 8.0)


@pytest.fixture(scope="session")
def plan16(grid16):
    return get_plan(grid16)


@pytest.fixture(scope="session")
def plan32(grid32):
    return get_plan(grid32)


@pytest.fixture(scope="session")
def maxwellian16(grid16):
    return maxwellian(grid16)


@pytest.fixture(scope="session")
def maxwellian32(grid32):
    return maxwellian(grid32)


@pytest.fixture
def rand_field():
    """Counter-based random fields: same seed, same values, any platform."""

    def make(grid: GridSpec, seed: int = 0, scale: float = 1.0) -> Field:
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        return Field(scale * rng.standard_normal((grid.n,) * 3), grid)

    return make
