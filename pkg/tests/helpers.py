"""Shared numerical oracles for the test suite.

These deliberately avoid the library's closed forms: gradients are checked by
central finite differences, minima by dense grid search, and posterior moments
by trapezoid quadrature, so the tests are independent witnesses.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import trapezoid


def fd_gradient(pot, q: np.ndarray) -> np.ndarray:
    """Central finite differences with per-component step 1e-6 * max(1, |q_d|)."""
    q = np.asarray(q, dtype=float)
    grad = np.empty_like(q)
    for d in range(q.size):
        h = 1e-6 * max(1.0, abs(q[d]))
        qp, qm = q.copy(), q.copy()
        qp[d] += h
        qm[d] -= h
        grad[d] = (pot.value(qp) - pot.value(qm)) / (2.0 * h)
    return grad


def rel_err(got, want, floor: float = 1.0) -> float:
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    scale = np.maximum(floor, np.abs(want))
    return float(np.max(np.abs(got - want) / scale))


def grid_argmin_1d(f, lo: float, hi: float, n: int = 40001) -> float:
    """Dense grid minimizer for scalar functions of one variable."""
    grid = np.linspace(lo, hi, n)
    vals = np.array([f(g) for g in grid])
    return float(grid[np.argmin(vals)])


def quadrature_moments_1d(value_fn, center: float, half_width: float, n: int = 100001):
    """Posterior mean and variance by trapezoid quadrature of exp(-V).

    value_fn maps a scalar q to V(q); the integrand is stabilized by
    subtracting the minimum sampled V.
    """
    grid = np.linspace(center - half_width, center + half_width, n)
    v = np.array([value_fn(g) for g in grid])
    w = np.exp(-(v - v.min()))
    z = trapezoid(w, grid)
    mean = trapezoid(grid * w, grid) / z
    var = trapezoid((grid - mean) ** 2 * w, grid) / z
    return mean, var
