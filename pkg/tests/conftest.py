import numpy as np
import pytest

from sharpbfgs.linalg import SpdMatrix


def rotation(rng, d):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q


def spd_with_spectrum(rng, evals):
    """SPD matrix with the given eigenvalues under a random rotation."""
    evals = np.asarray(evals, dtype=np.float64)
    q = rotation(rng, len(evals))
    return SpdMatrix((q.T * evals) @ q)


def random_spd(rng, d, lo=0.5, hi=4.0):
    return spd_with_spectrum(rng, rng.uniform(lo, hi, d))


def dominating_pair(rng, d, eta=5.0):
    """(a, g, a_sqrt) with a <= g <= eta a, built through a's square root."""
    q = rotation(rng, d)
    a_evals = np.exp(rng.uniform(-1.0, 1.0, d))
    a = (q.T * a_evals) @ q
    a_sqrt = (q.T * np.sqrt(a_evals)) @ q
    qb = rotation(rng, d)
    b = (qb.T * rng.uniform(1.0, eta, d)) @ qb
    g = a_sqrt @ b @ a_sqrt
    return SpdMatrix(a), SpdMatrix((g + g.T) / 2.0), a_sqrt


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
