import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def orthogonal_design(n, p, seed=0):
    """Centered design with orthogonal columns and unit ``diag(X^T X / n)``."""
    assert p < n
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, p))
    A -= A.mean(axis=0)
    q, _ = np.linalg.qr(A)
    return q * np.sqrt(n)


def dense_sigma(X):
    return X.T @ X / X.shape[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
