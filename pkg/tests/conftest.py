import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_mps(rng, width, chi, hermitian_like=False):
    from metaqnn.mps import DoubledMps

    dims = [1] + [chi] * (width - 1) + [1]
    ts = []
    for k in range(width):
        ts.append(rng.normal(size=(dims[k], 4, dims[k + 1])) + 1j * rng.normal(size=(dims[k], 4, dims[k + 1])))
    return DoubledMps(tuple(ts))
