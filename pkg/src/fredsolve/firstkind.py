"""First-kind problem container, Picard-series machinery, and helpers.

A first-kind problem is  (A psi)(x) = int_a^b k(x, xi) psi(xi) d xi = f(x);
the unknown appears only under the integral, so the problem is ill-posed in
L2 and every solver in this package consumes it through this container.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import Grid, build_grid, discretize_kernel, l2_norm
from .kernels import SpectralBasis, canonical_spectrum, triangular_kernel

__all__ = [
    "FirstKindProblem",
    "PicardDiagnostic",
    "NoiseSpec",
    "eigen_test_problem",
    "fourier_coefficients",
    "picard_solve",
    "picard_condition",
    "symmetrize",
    "residual_norm",
    "inject_noise",
    "volterra_differentiate",
    "VolterraSecondKind",
]


@dataclass(eq=False)
class FirstKindProblem:
    kernel: object  # two-argument callable
    f: object  # one-argument callable
    domain: tuple = (0.0, 1.0)
    exact_solution: object | None = None

    def operator(self, grid: Grid):
        return discretize_kernel(self.kernel, grid)

    def f_samples(self, grid: Grid) -> np.ndarray:
        vals = np.asarray(self.f(grid.nodes), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("right-hand side not finite on the grid")
        return vals


def eigen_test_problem(m: int = 1) -> FirstKindProblem:
    """Benchmark problem with the triangular kernel and f = sin(m pi x)/(m pi)^2,
    whose exact solution is sin(m pi x)."""
    mp = m * np.pi
    return FirstKindProblem(
        kernel=triangular_kernel,
        f=lambda x, mp=mp: np.sin(mp * np.asarray(x, dtype=float)) / mp**2,
        domain=(0.0, 1.0),
        exact_solution=lambda x, mp=mp: np.sin(mp * np.asarray(x, dtype=float)),
    )


def fourier_coefficients(basis: SpectralBasis, f, n_terms: int, quad_n: int = 256) -> np.ndarray:
    """alpha_k = int f e_k over the basis interval, by Gauss-Legendre."""
    a, b = basis.interval
    g = build_grid(a, b, "gauss_legendre", quad_n)
    fv = np.asarray(f(g.nodes), dtype=float)
    n_terms = min(n_terms, len(basis))
    return np.array([g.weights @ (fv * basis.evaluate(k, g.nodes)) for k in range(n_terms)])


def picard_solve(basis: SpectralBasis, f, n_terms: int, quad_n: int = 256):
    """Truncated spectral solution  psi = sum alpha_k lam_k e_k  as a callable.

    Requires an orthonormal basis; truncation is always defined, divergence
    of the full series is picard_condition's business.
    """
    alphas = fourier_coefficients(basis, f, n_terms, quad_n)
    lams = basis.char_numbers[: alphas.size]
    funcs = basis.eigenfunctions[: alphas.size]

    def psi(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a_k, lam_k, e_k in zip(alphas, lams, funcs):
            out += a_k * lam_k * e_k(x)
        return out if out.ndim else float(out)

    return psi


@dataclass(eq=False)
class PicardDiagnostic:
    """Running partial sums of sum alpha_k^2 lam_k^2 plus the coefficients.

    Boundedness of the full series is undecidable from finitely many terms,
    so `growth_ratio` only reports how much the last decade of terms added.
    """

    partial_sums: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.partial_sums) < -1e-15):
            raise ValueError("partial sums must be non-decreasing")

    def growth_ratio(self) -> float:
        """(last sum) / (sum at 90% of the terms); near 1 means the tail has
        stopped contributing."""
        s = self.partial_sums
        if s[-1] == 0.0:
            return 1.0
        k = max(0, int(0.9 * (s.size - 1)))
        if s[k] == 0.0:
            return np.inf
        return float(s[-1] / s[k])


def picard_condition(basis: SpectralBasis, f, n_terms: int, quad_n: int = 256) -> PicardDiagnostic:
    alphas = fourier_coefficients(basis, f, n_terms, quad_n)
    lams = basis.char_numbers[: alphas.size]
    return PicardDiagnostic(np.cumsum((alphas * lams) ** 2), alphas)


def symmetrize(p: FirstKindProblem, grid: Grid) -> FirstKindProblem:
    """Left-multiply by the adjoint:  k'(x,xi) = int k(z,x) k(z,xi) dz,
    f'(x) = int k(xi,x) f(xi) d xi,  with the integrals taken by ``grid``.

    The new kernel is symmetric positive semidefinite; the solution set is
    unchanged for consistent data.
    """
    w = grid.weights
    nodes = grid.nodes
    fv = p.f_samples(grid)

    def k_sym(x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        shape = np.broadcast(x, xi).shape
        kx = _kernel_at(p.kernel, nodes, np.broadcast_to(x, shape).ravel())
        kxi = _kernel_at(p.kernel, nodes, np.broadcast_to(xi, shape).ravel())
        out = (w[:, None] * kx * kxi).sum(axis=0).reshape(shape)
        return out if out.ndim else float(out)

    def f_sym(x):
        x = np.asarray(x, dtype=float)
        kx = _kernel_at(p.kernel, nodes, x.ravel())
        out = ((w * fv)[:, None] * kx).sum(axis=0).reshape(x.shape)
        return out if out.ndim else float(out)

    return FirstKindProblem(k_sym, f_sym, p.domain, exact_solution=p.exact_solution)


def _kernel_at(kernel, z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Array of kernel(z_i, x_j...) broadcast over a node vector z."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    Z = z[:, None]
    X = x[None, :]
    try:
        vals = np.asarray(kernel(Z, X), dtype=float)
        if vals.shape != (z.size, x.size):
            raise ValueError
    except Exception:
        vals = np.array([[float(kernel(zv, xv)) for xv in x] for zv in z])
    return vals


def residual_norm(p: FirstKindProblem, psi, grid: Grid) -> float:
    """Weighted L2 norm of  A psi - f  on the grid."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape[0] != grid.n:
        raise ValueError("solution samples do not match the grid")
    op = p.operator(grid)
    return l2_norm(grid, op.apply(psi) - p.f_samples(grid))


@dataclass(frozen=True)
class NoiseSpec:
    """Deterministic Fourier-mode perturbation with an exact L2 norm.

    kind = "white_fourier": seeded normal combination of sqrt(2) sin(k pi x)
    for k = 1..modes; kind = "single_mode": the single mode k = modes.  The
    perturbation is rescaled after sampling so its grid L2 norm equals
    target_l2_norm exactly.
    """

    target_l2_norm: float
    seed: int = 0
    kind: str = "white_fourier"
    modes: int = 4

    def __post_init__(self):
        if self.target_l2_norm < 0:
            raise ValueError("target norm must be non-negative")
        if self.kind not in ("white_fourier", "single_mode"):
            raise ValueError(f"unknown noise shape {self.kind!r}")
        if self.modes < 1:
            raise ValueError("modes must be positive")


def inject_noise(f_samples, spec: NoiseSpec, grid: Grid) -> np.ndarray:
    f_samples = np.asarray(f_samples, dtype=float)
    if f_samples.size == 0:
        raise ValueError("empty input")
    if f_samples.shape[0] != grid.n:
        raise ValueError("samples do not match the grid")
    if spec.target_l2_norm == 0.0:
        return f_samples.copy()
    t = (grid.nodes - grid.a) / (grid.b - grid.a)
    if spec.kind == "single_mode":
        e = np.sqrt(2.0) * np.sin(spec.modes * np.pi * t)
    else:
        rng = np.random.default_rng(spec.seed)
        coef = rng.standard_normal(spec.modes)
        e = np.zeros_like(t)
        for k, c in enumerate(coef, start=1):
            e += c * np.sqrt(2.0) * np.sin(k * np.pi * t)
    e *= spec.target_l2_norm / l2_norm(grid, e)
    return f_samples + e


@dataclass(eq=False)
class VolterraSecondKind:
    """Second-kind Volterra system  d(x) psi(x) + int_a^x m(x,xi) psi(xi) dxi = g(x),
    discretized with lower-triangular weights; solved by forward substitution."""

    grid: Grid
    diag: np.ndarray
    kernel_matrix: np.ndarray  # m(x_i, xi_j) values
    rhs: np.ndarray

    def solve(self) -> np.ndarray:
        from .grids import volterra_weights

        V = volterra_weights(self.grid.nodes)
        M = V * self.kernel_matrix
        n = self.grid.n
        psi = np.zeros(n)
        psi[0] = self.rhs[0] / self.diag[0]
        for i in range(1, n):
            acc = M[i, :i] @ psi[:i]
            psi[i] = (self.rhs[i] - acc) / (self.diag[i] + M[i, i])
        return psi


def volterra_differentiate(k, f_prime, grid: Grid, dk_dx=None) -> VolterraSecondKind:
    """Regularize a first-kind Volterra equation by differentiation.

    From  int_a^x k(x,xi) psi d xi = f(x)  one differentiation gives
    k(x,x) psi(x) + int_a^x dk/dx (x,xi) psi d xi = f'(x),  a well-posed
    second-kind equation provided k(x,x) stays away from zero.  The caller
    supplies f'; dk/dx defaults to a central difference.
    """
    x = grid.nodes
    diag = np.array([float(k(xi, xi)) for xi in x])
    if np.any(np.abs(diag) < 1e-8):
        raise ValueError("k(x,x) vanishes (or nearly) at a node")
    if dk_dx is None:
        h = 1e-6 * max(1.0, grid.b - grid.a)

        def dk_dx(xv, xiv, k=k, h=h):
            return (k(xv + h, xiv) - k(xv - h, xiv)) / (2 * h)

    M = np.array([[float(dk_dx(xi, xj)) for xj in x] for xi in x])
    g = np.asarray(f_prime(x), dtype=float)
    return VolterraSecondKind(grid, diag, M, g)
