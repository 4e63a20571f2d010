import numpy as np
import pytest

from app.services.fock_states import fock_service


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_dv_density(rng):
    """Factory of random real DV density matrices with dimension at most 12"""
    def build():
        dim = int(rng.integers(3, 13))
        return fock_service.to_density(fock_service.make_dv(rng.random(dim)))
    return build
