"""Grids, quadrature rules, and Nystrom discretization of integral operators.

Weights are baked into the operator matrices (entry ``(i, j)`` is
``k(x_i, xi_j) * w_j``), so downstream solvers treat discretized operators as
plain matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "QuadRule",
    "DiscreteOperator",
    "build_grid",
    "integrate",
    "discretize_kernel",
    "volterra_weights",
    "l2_norm",
]

_RULES = ("trapezoid", "simpson", "gauss_legendre")


@dataclass(frozen=True)
class QuadRule:
    """Quadrature rule tag plus its node count."""

    tag: str
    n: int

    def __post_init__(self):
        if self.tag not in _RULES:
            raise ValueError(f"unknown quadrature rule {self.tag!r}")
        if self.n < 2:
            raise ValueError("need at least two nodes")
        if self.tag == "simpson" and self.n % 2 == 0:
            raise ValueError("simpson requires an odd node count")


@dataclass(frozen=True, eq=False)
class Grid:
    """Quadrature nodes and positive weights on an interval [a, b].

    Invariants (checked on construction): nodes strictly increasing and
    contained in [a, b], weights positive and summing to b - a.
    """

    a: float
    b: float
    nodes: np.ndarray
    weights: np.ndarray
    rule: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("need at least two nodes")
        if self.nodes.size != self.weights.size:
            raise ValueError("nodes and weights must have the same length")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.nodes[0] < self.a - 1e-12 or self.nodes[-1] > self.b + 1e-12:
            raise ValueError("nodes outside [a, b]")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        length = self.b - self.a
        if abs(self.weights.sum() - length) > 1e-12 * max(1.0, abs(length)):
            raise ValueError("weights must sum to b - a")

    @property
    def n(self) -> int:
        return self.nodes.size

    def is_uniform(self) -> bool:
        h = np.diff(self.nodes)
        return bool(np.allclose(h, h[0], rtol=1e-12, atol=1e-14))


def build_grid(a: float, b: float, rule, n: int | None = None) -> Grid:
    """Build a quadrature grid on [a, b].

    ``rule`` may be a QuadRule or one of the tags "trapezoid", "simpson",
    "gauss_legendre"; ``n`` is the node count (odd for simpson).
    """
    if isinstance(rule, QuadRule):
        tag, n = rule.tag, rule.n if n is None else n
    else:
        tag = str(rule)
    if n is None:
        raise ValueError("node count n is required")
    rule = QuadRule(tag, n)  # validates tag / parity / n >= 2
    if not b > a:
        raise ValueError("need b > a")

    if tag == "trapezoid":
        x = np.linspace(a, b, n)
        h = (b - a) / (n - 1)
        w = np.full(n, h)
        w[0] = w[-1] = h / 2
    elif tag == "simpson":
        x = np.linspace(a, b, n)
        h = (b - a) / (n - 1)
        w = np.zeros(n)
        w[0] = w[-1] = h / 3
        w[1:-1:2] = 4 * h / 3
        w[2:-1:2] = 2 * h / 3
    else:  # gauss_legendre, affinely mapped from [-1, 1]
        xr, wr = np.polynomial.legendre.leggauss(n)
        x = 0.5 * (b - a) * xr + 0.5 * (a + b)
        w = 0.5 * (b - a) * wr
    return Grid(a, b, x, w, rule=tag)


def integrate(grid: Grid, values) -> float:
    """Quadrature sum  sum_i w_i * values_i."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.nodes.shape:
        raise ValueError("values length does not match grid")
    return float(grid.weights @ values)


def l2_norm(grid: Grid, values) -> float:
    """Weighted L2 norm of nodal samples."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.n:
        raise ValueError("values length does not match grid")
    return float(np.sqrt(values @ (grid.weights * values)))


def _sample_kernel(k, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Evaluate k on the tensor product of x and xi, tolerating scalar-only k."""
    X, XI = np.meshgrid(x, xi, indexing="ij")
    try:
        vals = np.asarray(k(X, XI), dtype=float)
        if vals.shape != X.shape:
            raise ValueError
    except Exception:
        vals = np.array([[float(k(xv, xiv)) for xiv in xi] for xv in x])
    return vals


@dataclass(eq=False)
class DiscreteOperator:
    """Nystrom matrix of an integral operator: entry (i,j) = k(x_i, xi_j) w_j."""

    matrix: np.ndarray
    row_grid: Grid
    col_grid: Grid
    kernel_values: np.ndarray = field(repr=False, default=None)

    def apply(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.col_grid.n:
            raise ValueError("values length does not match column grid")
        return self.matrix @ values

    __call__ = apply


def discretize_kernel(k, row_grid: Grid, col_grid: Grid | None = None) -> DiscreteOperator:
    """Discretize the operator  (A psi)(x) = int k(x, xi) psi(xi) d xi.

    Kernels with a diagonal kink are sampled at the nodes as given; callers
    needing a one-sided diagonal convention should build it into ``k``.
    """
    if col_grid is None:
        col_grid = row_grid
    vals = _sample_kernel(k, row_grid.nodes, col_grid.nodes)
    if not np.all(np.isfinite(vals)):
        raise ValueError("kernel is not finite at some node pair")
    return DiscreteOperator(vals * col_grid.weights, row_grid, col_grid, kernel_values=vals)


def volterra_weights(nodes: np.ndarray) -> np.ndarray:
    """Lower-triangular weights V with  (V f)_i ~ int_{x_0}^{x_i} f.

    Row i uses composite Simpson on whole node pairs, patched with a 3/8 rule
    (trapezoid for the very first interval) when i is odd, so the quadrature
    never straddles the moving upper limit. Requires uniform nodes.
    """
    nodes = np.asarray(nodes, dtype=float)
    h = np.diff(nodes)
    if not np.allclose(h, h[0], rtol=1e-12, atol=1e-14):
        raise ValueError("volterra_weights requires a uniform grid")
    h = float(h[0])
    n = nodes.size
    V = np.zeros((n, n))
    for i in range(1, n):
        w = np.zeros(i + 1)
        if i % 2 == 0:
            w[0] = w[i] = h / 3
            w[1:i:2] = 4 * h / 3
            w[2:i:2] = 2 * h / 3
        elif i == 1:
            w[:] = h / 2
        elif i == 3:
            w[:] = [3 * h / 8, 9 * h / 8, 9 * h / 8, 3 * h / 8]
        else:
            m = i - 3
            w[0] = w[m] = h / 3
            w[1:m:2] = 4 * h / 3
            w[2:m:2] = 2 * h / 3
            w[m] += 3 * h / 8
            w[m + 1] += 9 * h / 8
            w[m + 2] += 9 * h / 8
            w[m + 3] += 3 * h / 8
        V[i, : i + 1] = w
    return V
