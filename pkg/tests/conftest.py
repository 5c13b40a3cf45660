"""Shared fixtures and small data builders for the test suite."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)


def random_pair(rng, n=None, d=None):
    """One valid (matrix values, attention scores) pair of arrays."""
    if n is None:
        n = int(rng.integers(1, 40))
    if d is None:
        d = int(rng.integers(1, 24))
    values = rng.standard_normal((n, d))
    scores = rng.random(n) + 1e-6
    return values, scores


def matrix_with_spectrum(rng, sigma, n=None, d=None):
    """A matrix whose singular values equal `sigma`, via random rotations."""
    sigma = np.asarray(sigma, dtype=float)
    r = sigma.size
    if n is None:
        n = r
    if d is None:
        d = r
    assert min(n, d) >= r
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((d, d)))
    core = np.zeros((n, d))
    core[:r, :r] = np.diag(sigma)
    return q1 @ core @ q2
