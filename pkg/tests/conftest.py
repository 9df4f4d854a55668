import numpy as np
import pytest

from quasicrack import GridSpec, build_grid


@pytest.fixture(scope="session")
def grid_small():
    """8x4 on a 2x1 domain: square cells, tip node at x=0.5."""
    return build_grid(GridSpec(2.0, 1.0, 8, 4, 0.5))


@pytest.fixture(scope="session")
def grid_mid():
    """20x10 on a 2x1 domain, square cells."""
    return build_grid(GridSpec(2.0, 1.0, 20, 10, 0.1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
