"""Shared independent oracles for the test suite.

These implementations deliberately take the dumbest correct path (pairwise
definition checks, Monte Carlo volume, central differences) so they stay
independent of the library code they validate.
"""

import numpy as np
import pytest


def brute_force_nondominated(points: np.ndarray) -> np.ndarray:
    """O(n^2) definition-based non-dominated filter (duplicates collapsed)."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    keep = []
    for i in range(len(pts)):
        dominated = False
        for j in range(len(pts)):
            if i == j:
                continue
            if np.all(pts[j] <= pts[i]) and np.any(pts[j] < pts[i]):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return pts[keep]


def monte_carlo_hv(points, ref, n_samples: int, seed: int):
    """Dominated-volume estimate and its standard error.

    Samples uniformly in the box [componentwise min of points, ref] which
    contains the whole dominated region.
    """
    pts = np.asarray(points, dtype=float)
    r = np.asarray(ref, dtype=float)
    low = pts.min(axis=0)
    box = float(np.prod(r - low))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 100_000
    remaining = n_samples
    while remaining > 0:
        take = min(chunk, remaining)
        q = rng.random((take, r.size)) * (r - low) + low
        dominated = np.zeros(take, dtype=bool)
        for p in pts:
            dominated |= np.all(p <= q, axis=1)
        hits += int(dominated.sum())
        remaining -= take
    frac = hits / n_samples
    stderr = box * np.sqrt(max(frac * (1.0 - frac), 1e-12) / n_samples)
    return frac * box, stderr


def central_difference_gradient(fn, x, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[i] += eps
        lo[i] -= eps
        grad[i] = (fn(hi) - fn(lo)) / (2.0 * eps)
    return grad


def assert_close(actual, expected, rtol: float, atol: float = 1e-10, msg: str = ""):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    np.testing.assert_allclose(actual, expected, rtol=rtol, atol=atol, err_msg=msg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
