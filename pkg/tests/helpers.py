"""Shared oracles for the test suite.

The membrane reference solution solves  -laplace u = 1  on the unit square
with homogeneous Dirichlet conditions.  `membrane_u_center` sums the double
sine series (absolutely convergent at interior points); the field oracles use
the single-series form with hyperbolic profiles, which converges
exponentially away from the edges, so psi = dxx u can be sampled to near
machine accuracy on a grid (edge columns carry the analytic limits).
"""

import numpy as np


def membrane_u_center(terms: int = 200) -> float:
    """u(1/2, 1/2) from the double sine series
    (16/pi^4) sum sin((2i+1) pi x) sin((2j+1) pi y) / ((2i+1)(2j+1)((2i+1)^2+(2j+1)^2))."""
    total = 0.0
    for i in range(terms):
        mi = 2 * i + 1
        si = np.sin(mi * np.pi / 2)
        for j in range(terms):
            mj = 2 * j + 1
            total += (16 / np.pi**4) * si * np.sin(mj * np.pi / 2) / (mi * mj * (mi**2 + mj**2))
    return total


def _cosh_ratio(i: int, x: np.ndarray) -> np.ndarray:
    """cosh(i pi (x - 1/2)) / cosh(i pi / 2), computed without overflow."""
    z = np.exp(-i * np.pi * (0.5 - np.abs(x - 0.5)))
    return z * (1.0 + np.exp(-2 * i * np.pi * np.abs(x - 0.5))) / (1.0 + np.exp(-i * np.pi))


def membrane_u(X, Y, terms: int = 200) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    out = np.zeros(np.broadcast(X, Y).shape)
    for k in range(terms):
        i = 2 * k + 1
        out += (4 / (np.pi**3 * i**3)) * (1.0 - _cosh_ratio(i, X)) * np.sin(i * np.pi * Y)
    return out


def membrane_psi(X, Y, terms: int = 400) -> np.ndarray:
    """psi = dxx u.  Interior: exponentially convergent series; the x = 0, 1
    edges carry the analytic limit -1 (for interior y), corners 0."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    out = np.zeros(np.broadcast(X, Y).shape)
    for k in range(terms):
        i = 2 * k + 1
        term = -(4 / (np.pi * i)) * _cosh_ratio(i, X) * np.sin(i * np.pi * Y)
        out += term
        if np.max(np.abs(term)) < 1e-16:
            break
    return out
