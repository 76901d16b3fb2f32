"""Poisson kernel, its resolvent series, and canonical spectral data.

The Poisson kernel used throughout is

    h(x, xi) = (1 - r^2) / (1 - 2 r cos(2 pi (x - xi)) + r^2),   0 < |r| < 1,

whose Fourier form is  h = 1 + 2 sum_{n>=1} r^n cos(2 pi n (x - xi)).  On the
basis  e_0 = 1/sqrt(2),  e_n in {cos(2 pi n x), sin(2 pi n x)}  (which has
squared norm 1/2 on a unit interval and 1 on [-1, 1]) the integral operator
over [-1, 1] has characteristic numbers 0.5 r^{-n}, and its resolvent at
parameter lam is

    H(x, xi, lam) = 2 sum_{n>=0} r^n / (1 - 2 lam r^n) e_n(x) e_n(xi)
                  = 1/(1 - 2 lam) + 2 sum_{n>=1} r^n cos(2 pi n (x-xi)) / (1 - 2 lam r^n).

H satisfies the exact relation  lam int_{-1}^{1} h(x,z) H(z,xi,lam) dz =
H(x,xi,lam) - h(x,xi),  which `resolvent_identity_residual` verifies on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import Grid, build_grid

__all__ = [
    "PoissonKernelSpec",
    "ResolventSpec",
    "SpectralBasis",
    "poisson_h",
    "resolvent_H",
    "resolvent_dH_dlambda",
    "resolvent_identity_residual",
    "triangular_kernel",
    "canonical_spectrum",
    "mercer_reconstruct",
]

SINGULAR_TERM_TOL = 1e-9


@dataclass(frozen=True)
class PoissonKernelSpec:
    """Parameter r of the Poisson kernel, 0 < |r| < 1."""

    r: float

    def __post_init__(self):
        if not 0.0 < abs(self.r) < 1.0:
            raise ValueError("need 0 < |r| < 1")


@dataclass(frozen=True)
class ResolventSpec:
    """Poisson resolvent parameters: r, the resolvent parameter lam, and the
    series truncation n_terms.

    Construction fails if any retained term is singular, i.e. if
    |1 - 2 lam r^n| <= 1e-9 for some 0 <= n < n_terms: near-hits of the
    characteristic ladder destroy conditioning.
    """

    r: float
    lam: float
    n_terms: int = 60

    def __post_init__(self):
        PoissonKernelSpec(self.r)
        if self.n_terms < 1:
            raise ValueError("n_terms must be positive")
        dens = 1.0 - 2.0 * self.lam * self.r ** np.arange(self.n_terms)
        if np.min(np.abs(dens)) <= SINGULAR_TERM_TOL:
            n_bad = int(np.argmin(np.abs(dens)))
            raise ValueError(
                f"singular resolvent term at n={n_bad}: 1 - 2*lam*r^n = {dens[n_bad]:.3e}"
            )

    def tail_bound(self) -> float:
        """Geometric bound on the dropped series tail."""
        rn = abs(self.r) ** self.n_terms
        dens = abs(1.0 - 2.0 * self.lam * self.r ** self.n_terms)
        return 4.0 * rn / ((1.0 - abs(self.r)) * min(1.0, dens))


def poisson_h(x, xi, spec: PoissonKernelSpec):
    """Poisson kernel h(x, xi); symmetric, 1-periodic in x - xi, positive for r in (0,1)."""
    r = spec.r
    d = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    return (1.0 - r * r) / (1.0 - 2.0 * r * np.cos(2.0 * np.pi * d) + r * r)


def resolvent_H(x, xi, spec: ResolventSpec):
    """Truncated resolvent series H(x, xi, lam); symmetric in (x, xi)."""
    r, lam = spec.r, spec.lam
    d = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    out = np.full_like(d, 1.0 / (1.0 - 2.0 * lam), dtype=float)
    for n in range(1, spec.n_terms):
        rn = r ** n
        out += 2.0 * rn / (1.0 - 2.0 * lam * rn) * np.cos(2.0 * np.pi * n * d)
    return out if out.ndim else float(out)


def resolvent_dH_dlambda(x, xi, spec: ResolventSpec):
    """Term-wise lam-derivative of H: 2 sum 2 r^{2n}/(1-2 lam r^n)^2 e_n e_n.

    Equals the self-composition  int_{-1}^{1} H(x,z) H(z,xi) dz.
    """
    r, lam = spec.r, spec.lam
    d = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    out = np.full_like(d, 2.0 / (1.0 - 2.0 * lam) ** 2, dtype=float)
    for n in range(1, spec.n_terms):
        rn = r ** n
        out += 4.0 * rn * rn / (1.0 - 2.0 * lam * rn) ** 2 * np.cos(2.0 * np.pi * n * d)
    return out if out.ndim else float(out)


def resolvent_identity_residual(spec: ResolventSpec, test_grid: Grid,
                                quad_grid: Grid | None = None) -> float:
    """Max defect of  lam int_{-1}^{1} h(x,z) H(z,xi) dz = H(x,xi) - h(x,xi)
    over all node pairs of ``test_grid`` (a grid spanning [-1, 1]).

    The middle-argument integral runs over ``quad_grid`` (default: a 257-node
    trapezoid rule on [-1, 1], spectrally accurate for these periodic
    integrands), so the defect reported at the sample pairs reflects the
    series truncation, not the sampling density.
    """
    hk = PoissonKernelSpec(spec.r)
    if quad_grid is None:
        quad_grid = build_grid(-1.0, 1.0, "trapezoid", 257)
    x = test_grid.nodes
    z = quad_grid.nodes
    h_xz = poisson_h(x[:, None], z[None, :], hk)
    H_zx = resolvent_H(z[:, None], x[None, :], spec)
    comp = spec.lam * (h_xz * quad_grid.weights) @ H_zx
    X, XI = np.meshgrid(x, x, indexing="ij")
    defect = comp - (resolvent_H(X, XI, spec) - poisson_h(X, XI, hk))
    return float(np.abs(defect).max())


def triangular_kernel(x, xi):
    """Symmetric triangular kernel on the unit square:
    (1-x) xi for xi <= x, x (1-xi) for xi >= x."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12) or np.any(xi < -1e-12) or np.any(xi > 1 + 1e-12):
        raise ValueError("arguments must lie in [0, 1]")
    out = np.where(xi <= x, (1.0 - x) * xi, x * (1.0 - xi))
    return out if out.ndim else float(out)


@dataclass(eq=False)
class SpectralBasis:
    """Characteristic numbers with matching eigenfunctions, orthonormal on
    ``interval``.  One eigenfunction per entry; degenerate characteristic
    numbers (the cos/sin pairs of the Poisson families) appear twice.
    """

    char_numbers: np.ndarray
    eigenfunctions: list = field(repr=False)
    interval: tuple

    def __post_init__(self):
        self.char_numbers = np.asarray(self.char_numbers, dtype=float)
        if len(self.eigenfunctions) != self.char_numbers.size:
            raise ValueError("one eigenfunction per characteristic number")

    def __len__(self) -> int:
        return self.char_numbers.size

    def evaluate(self, k: int, x):
        return self.eigenfunctions[k](np.asarray(x, dtype=float))

    def gram_defect(self, n_funcs: int | None = None, quad_n: int = 1025) -> float:
        """Max deviation of the Gram matrix from the identity under a fine
        Simpson rule; small values certify orthonormality."""
        m = len(self) if n_funcs is None else min(n_funcs, len(self))
        g = build_grid(self.interval[0], self.interval[1], "simpson", quad_n)
        F = np.array([self.evaluate(k, g.nodes) for k in range(m)])
        G = (F * g.weights) @ F.T
        return float(np.abs(G - np.eye(m)).max())


def _sin_mode(n):
    return lambda x, n=n: math.sqrt(2.0) * np.sin(n * np.pi * np.asarray(x, dtype=float))


def canonical_spectrum(which: str, r: float | None = None, n_modes: int = 40) -> SpectralBasis:
    """Spectral data for the canonical kernels.

    which = "triangular": triangular kernel on [0, 1];
            char numbers (n pi)^2, eigenfunctions sqrt(2) sin(n pi x).
    which = "poisson": Poisson kernel on [0, 1]; char numbers r^-n (the n >= 1
            ones doubled for the cos/sin pair), orthonormalized constants /
            sqrt(2) cos / sqrt(2) sin of argument 2 pi n x.
    which = "poisson_sym": the same operator taken over [-1, 1]; char numbers
            0.5 r^-n, eigenfunctions orthonormal on [-1, 1] (1/sqrt(2), cos,
            sin without extra scaling).
    """
    if which == "triangular":
        lams = np.array([(n * np.pi) ** 2 for n in range(1, n_modes + 1)])
        funcs = [_sin_mode(n) for n in range(1, n_modes + 1)]
        return SpectralBasis(lams, funcs, (0.0, 1.0))

    if which in ("poisson", "poisson_sym"):
        if r is None:
            raise ValueError("r is required for the poisson spectra")
        PoissonKernelSpec(r)
        scale = 1.0 if which == "poisson" else 0.5
        lams = [scale * 1.0]
        if which == "poisson":
            funcs = [lambda x: np.ones_like(np.asarray(x, dtype=float))]
            amp = math.sqrt(2.0)
        else:
            funcs = [lambda x: np.full_like(np.asarray(x, dtype=float), 1.0 / math.sqrt(2.0))]
            amp = 1.0
        for n in range(1, n_modes + 1):
            lam = scale * r ** (-n)
            lams += [lam, lam]
            funcs.append(lambda x, n=n, a=amp: a * np.cos(2 * n * np.pi * np.asarray(x, dtype=float)))
            funcs.append(lambda x, n=n, a=amp: a * np.sin(2 * n * np.pi * np.asarray(x, dtype=float)))
        interval = (0.0, 1.0) if which == "poisson" else (-1.0, 1.0)
        return SpectralBasis(np.array(lams), funcs, interval)

    raise ValueError(f"unknown spectrum {which!r}")


def mercer_reconstruct(basis: SpectralBasis, n_terms: int, x, xi):
    """Partial Mercer sum  sum_{k<n_terms} e_k(x) e_k(xi) / lam_k."""
    n_terms = min(n_terms, len(basis))
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(np.broadcast(x, xi).shape)
    for k in range(n_terms):
        out += basis.evaluate(k, x) * basis.evaluate(k, xi) / basis.char_numbers[k]
    return out if out.ndim else float(out)
