import numpy as np
import pytest

from signlp.simulate import DGPConfig, simulate


@pytest.fixture(scope="session")
def small_sim():
    """One modest synthetic panel shared by read-only tests."""
    cfg = DGPConfig(
        countries=8,
        months=120,
        rho=0.8,
        theta_plus=2.0,
        theta_minus=0.5,
        seed=20240,
    )
    return simulate(cfg, horizons=8)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
