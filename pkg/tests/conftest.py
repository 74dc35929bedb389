import numpy as np
import pytest

from bscat import GridSpec, sample_gaussian
from bscat.sphere import default_quadrature, product_quadrature

UNIT_WIDTH = 2**-0.5  # sample_gaussian(width=UNIT_WIDTH) is exp(-|x|^2)


@pytest.fixture(scope="session")
def quad14():
    return default_quadrature(14)


@pytest.fixture(scope="session")
def quad8():
    return product_quadrature(8)


@pytest.fixture(scope="session")
def spec48():
    return GridSpec(48, 12.0)


@pytest.fixture(scope="session")
def unit_gaussian(spec48):
    """exp(-|x|^2) on the standard grid."""
    return sample_gaussian(spec48, width=UNIT_WIDTH)


@pytest.fixture(scope="session")
def offset_pair(spec48):
    """A generic non-symmetric pair for symmetry and route tests."""
    f = sample_gaussian(spec48, width=UNIT_WIDTH)
    g = sample_gaussian(spec48, center=(0.4, -0.3, 0.2), width=0.9)
    return f, g


def random_field(spec, seed):
    rng = np.random.default_rng(seed)
    from bscat import ScalarField

    vals = rng.standard_normal((spec.npts,) * 3) + 1j * rng.standard_normal((spec.npts,) * 3)
    return ScalarField(spec, vals)
