import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def binomial_band(p, n, sigmas=3.0):
    """Half-width of a ``sigmas``-sigma band for a frequency estimated from ``n`` trials."""
    return sigmas * np.sqrt(np.maximum(p * (1 - p), 0.0) / n)
