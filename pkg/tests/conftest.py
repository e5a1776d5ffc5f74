import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

HAMMING2 = np.array([[0.0, 1.0], [1.0, 0.0]])


def hamming(nx, nh=None):
    nh = nx if nh is None else nh
    return 1.0 - np.eye(nx, nh)


def random_joint(rng, shape, alpha=1.0):
    return rng.dirichlet(np.full(int(np.prod(shape)), alpha)).reshape(shape)


def h2(p):
    p = np.clip(p, 1e-300, 1.0)
    q = np.clip(1.0 - p, 1e-300, 1.0)
    return float(-(p * np.log2(p) + q * np.log2(q)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
