import numpy as np
import pytest


def central_diff(f, x, step=1e-6):
    """Central finite-difference gradient of a scalar (or vector) function."""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = step
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * step))
    return np.array(cols)


def rel_err(approx, exact):
    approx, exact = np.asarray(approx), np.asarray(exact)
    return float(np.max(np.abs(approx - exact)) / max(1.0, np.max(np.abs(exact))))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
