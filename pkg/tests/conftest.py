import numpy as np
import pytest

from kdvlab import TorusGrid, make_field


def random_field(grid, rng, decay=1.0, amplitude=1.0, mean_zero=False):
    """Random real field with |coeff(j)| ~ amplitude / (1+|j|)^decay."""
    k = grid.cutoff
    c = rng.standard_normal(2 * k + 1) + 1j * rng.standard_normal(2 * k + 1)
    js = np.abs(np.arange(-k, k + 1))
    c *= amplitude / (1.0 + js) ** decay
    if mean_zero:
        c[k] = 0.0
    return make_field(grid, coeffs=c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_grid():
    return TorusGrid.make(1.0, 16)
