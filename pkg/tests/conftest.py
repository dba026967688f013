import numpy as np
import pytest

from meanfield.equilibrium import solve_bessel_selfconsistency


@pytest.fixture(scope="session")
def bessel_half():
    """Self-consistent cosine amplitude for the standard torus model."""
    return solve_bessel_selfconsistency(0.5, 1.0)


@pytest.fixture(scope="session")
def f_inf_cosine(bessel_half):
    return bessel_half.density(512)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
