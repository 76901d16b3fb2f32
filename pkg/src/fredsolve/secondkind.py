"""Generic machinery for Fredholm equations of the second kind.

A block problem is

    chi_i(x) = mu * sum_j int K_ij(x, xi) chi_j(xi) d xi + F_i(x),

held as raw kernel sample matrices (values K_ij(x_p, xi_q), no weights) plus
one grid per block; the solvers multiply in the column weights themselves.
Stacking the blocks into one long unknown is exact bookkeeping: the stacked
dense matrix is the same matrix, so block and stacked solves agree bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .grids import Grid

__all__ = [
    "SecondKindProblem",
    "ContractionReport",
    "SingularSystemError",
    "IterationDivergenceError",
    "norm_M",
    "assemble_dense",
    "nystrom_solve",
    "discrete_residual",
    "simple_iteration",
    "neumann_resolvent",
    "solve_via_resolvent",
]

RCOND_FLOOR = 1e-12


class SingularSystemError(np.linalg.LinAlgError):
    """Discrete system is singular or numerically near-singular."""


class IterationDivergenceError(RuntimeError):
    """Successive approximations diverge."""


@dataclass(eq=False)
class SecondKindProblem:
    """blocks[i][j] holds K_ij sampled on (grids[i].nodes x grids[j].nodes)."""

    blocks: list
    grids: list
    mu: float
    F: list

    def __post_init__(self):
        nb = len(self.grids)
        if len(self.blocks) != nb or any(len(row) != nb for row in self.blocks):
            raise ValueError("blocks must form a square block matrix")
        for i, row in enumerate(self.blocks):
            for j, B in enumerate(row):
                B = np.asarray(B, dtype=float)
                if B.shape != (self.grids[i].n, self.grids[j].n):
                    raise ValueError(f"block ({i},{j}) has inconsistent shape")
                self.blocks[i][j] = B
        if len(self.F) != nb:
            raise ValueError("one right-hand side per block")
        self.F = [np.asarray(v, dtype=float) for v in self.F]
        for g, v in zip(self.grids, self.F):
            if v.shape != (g.n,):
                raise ValueError("right-hand side does not match its grid")

    @property
    def block_count(self) -> int:
        return len(self.grids)


@dataclass(frozen=True)
class ContractionReport:
    """M is the aggregate L2 kernel norm, M^2 = sum_ij double-int |K_ij|^2.
    contractive <=> |mu| M < 1 guarantees convergence of simple iteration;
    regular adds the row-wise square-integral bound."""

    M: float
    mu_times_M: float
    contractive: bool
    regular: bool
    row_bound: float

    def __post_init__(self):
        assert self.contractive == (abs(self.mu_times_M) < 1.0)


def norm_M(problem: SecondKindProblem) -> ContractionReport:
    M2 = 0.0
    row_bound = 0.0
    finite = True
    for i, row in enumerate(problem.blocks):
        wi = problem.grids[i].weights
        for j, B in enumerate(row):
            wj = problem.grids[j].weights
            sq = B * B
            M2 += float(wi @ sq @ wj)
            rows = sq @ wj
            finite &= bool(np.all(np.isfinite(rows)))
            row_bound = max(row_bound, float(rows.max()))
    M = float(np.sqrt(M2))
    mu_m = abs(problem.mu) * M
    return ContractionReport(M, mu_m, mu_m < 1.0, finite, row_bound)


def assemble_dense(problem: SecondKindProblem):
    """Dense stacked system (I - mu K W) chi = F; returns (A, F, offsets)."""
    sizes = [g.n for g in problem.grids]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    ntot = offsets[-1]
    A = np.eye(ntot)
    for i, row in enumerate(problem.blocks):
        for j, B in enumerate(row):
            sl_i = slice(offsets[i], offsets[i + 1])
            sl_j = slice(offsets[j], offsets[j + 1])
            A[sl_i, sl_j] -= problem.mu * B * problem.grids[j].weights
    return A, np.concatenate(problem.F), offsets


def _split(vec: np.ndarray, offsets) -> list:
    return [vec[offsets[i]: offsets[i + 1]] for i in range(len(offsets) - 1)]


def nystrom_solve(problem: SecondKindProblem) -> list:
    """Direct dense solve; raises SingularSystemError if the reciprocal
    condition estimate falls below 1e-12 (mu at a discrete characteristic
    number). The discrete residual is checked to 1e-10 relative post-solve."""
    A, F, offsets = assemble_dense(problem)
    rcond = _rcond_estimate(A)
    if rcond < RCOND_FLOOR:
        raise SingularSystemError(
            f"system numerically singular (rcond estimate {rcond:.2e}); "
            "mu coincides with a discrete characteristic number"
        )
    chi = scipy.linalg.solve(A, F)
    scale = max(np.linalg.norm(F), np.linalg.norm(A @ chi), 1e-300)
    rel = np.linalg.norm(A @ chi - F) / scale
    if rel > 1e-10:
        raise SingularSystemError(f"discrete solve residual {rel:.2e} exceeds 1e-10")
    return _split(chi, offsets)


def _rcond_estimate(A: np.ndarray) -> float:
    lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.min() == 0.0:
        return 0.0
    anorm = np.abs(A).sum(axis=1).max()
    gecon = scipy.linalg.get_lapack_funcs("gecon", (A,))
    rcond, _ = gecon(lu, anorm, norm="I")
    return float(rcond)


def discrete_residual(problem: SecondKindProblem, solution: list) -> float:
    """Relative residual of a block solution in the stacked discrete system."""
    A, F, _ = assemble_dense(problem)
    chi = np.concatenate([np.asarray(s, dtype=float) for s in solution])
    return float(np.linalg.norm(A @ chi - F) / max(np.linalg.norm(F), 1e-300))


def simple_iteration(problem: SecondKindProblem, chi0=None, tol: float = 1e-12,
                     max_iters: int = 10000):
    """Successive approximations  chi <- mu K W chi + F.

    Convergence is guaranteed when the contraction report says |mu| M < 1;
    otherwise the iteration proceeds anyway and raises
    IterationDivergenceError after 20 consecutive growing step sizes.
    Returns (blocks, distances) with the successive-step L2 distances.
    """
    sizes = [g.n for g in problem.grids]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    W = np.concatenate([g.weights for g in problem.grids])
    A, F, _ = assemble_dense(problem)
    K = np.eye(offsets[-1]) - A  # = mu * blocks * weights
    chi = (np.zeros(offsets[-1]) if chi0 is None
           else np.concatenate([np.asarray(c, dtype=float) for c in chi0]))
    dists = []
    growing = 0
    for _ in range(max_iters):
        new = K @ chi + F
        d = float(np.sqrt(((new - chi) ** 2) @ W))
        if dists and d > dists[-1]:
            growing += 1
            if growing >= 20:
                raise IterationDivergenceError(
                    f"successive distances grew for 20 steps (last {d:.3e})"
                )
        else:
            growing = 0
        dists.append(d)
        chi = new
        if d <= tol:
            break
    return _split(chi, offsets), dists


def neumann_resolvent(kernel_block, mu: float, n_terms: int, grid: Grid) -> np.ndarray:
    """Truncated resolvent  Gamma = sum_{n>=1} mu^{n-1} K_n  with K_1 = K and
    K_{m+1} the quadrature composition of K_m with K."""
    K = np.asarray(kernel_block, dtype=float)
    gamma = K.copy()
    Kn = K.copy()
    for n in range(1, n_terms):
        Kn = (Kn * grid.weights) @ K  # K_{n+1}(x,xi) = int K_n(x,z) K(z,xi) dz
        gamma += mu**n * Kn
    return gamma


def solve_via_resolvent(kernel_block, mu: float, F, n_terms: int, grid: Grid) -> np.ndarray:
    """chi = F + mu int Gamma(x, xi) F(xi) d xi  with the truncated resolvent."""
    gamma = neumann_resolvent(kernel_block, mu, n_terms, grid)
    F = np.asarray(F, dtype=float)
    return F + mu * (gamma * grid.weights) @ F
