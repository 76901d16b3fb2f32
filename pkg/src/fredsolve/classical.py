"""Baseline solvers for first-kind problems.

Direct regularization (Lavrentiev / stabilized variational form), the
norm-constrained quasisolution, and the iterative family: residual-correction
iteration on symmetric positive kernels, its normal-equation form for general
kernels, the running-average variant, the implicit shifted iteration, and
steepest descent with exact line search.  All iterations share one stopping
rule: stop at the first step with

    || psi_{n+1} - psi_n || <= c1 * delta + c2 * gamma,

where delta and gamma are the data and kernel error levels; when the caller
supplies no error levels the rule falls back to a fixed tolerance plus the
iteration cap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .firstkind import FirstKindProblem
from .grids import Grid, l2_norm
from .kernels import SpectralBasis
from .secondkind import SingularSystemError, _rcond_estimate

__all__ = [
    "RegularizationParams",
    "IterationParams",
    "StoppingRule",
    "MethodResult",
    "ModeDiagnostic",
    "StepOutOfRangeError",
    "lavrentiev_solve",
    "quasisolution_solve",
    "fridman_iterate",
    "landweber_iterate",
    "averaged_iterate",
    "implicit_iterate",
    "steepest_descent_iterate",
    "mode_diagnostic",
    "perlin_deflate",
]


class StepOutOfRangeError(ValueError):
    """Iteration step violates its admissible interval."""


@dataclass(frozen=True)
class StoppingRule:
    """Threshold c1*delta + c2*gamma on the successive-iterate distance;
    falls back to ``fallback_tol`` when the threshold is zero."""

    c1: float = 0.0
    c2: float = 0.0
    delta: float = 0.0
    gamma: float = 0.0
    fallback_tol: float = 1e-10

    def __post_init__(self):
        if min(self.c1, self.c2, self.delta, self.gamma) < 0:
            raise ValueError("stopping-rule constants must be non-negative")
        if self.fallback_tol <= 0:
            raise ValueError("fallback_tol must be positive")

    def threshold(self) -> float:
        t = self.c1 * self.delta + self.c2 * self.gamma
        return t if t > 0 else self.fallback_tol


@dataclass(frozen=True)
class RegularizationParams:
    alpha: float
    p0: object | None = None  # stabilizer weight function, >= 0
    variant: str = "lavrentiev"

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.variant not in ("lavrentiev", "stabilized_p0"):
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class IterationParams:
    scheme: str
    step: float = 1.0
    max_iters: int = 10000
    stop: StoppingRule = field(default_factory=StoppingRule)
    lambda1: float | None = None  # smallest characteristic number, if known

    _SCHEMES = ("fridman", "landweber", "averaged", "implicit", "steepest_descent")

    def __post_init__(self):
        if self.scheme not in self._SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass(eq=False)
class MethodResult:
    """Solution samples with the residual per iterate (index 0 is the initial
    iterate; direct solvers report a single entry and zero iterations)."""

    solution: np.ndarray
    residual_history: list
    iterations_used: int
    converged: bool
    params_echo: dict

    def __post_init__(self):
        if len(self.residual_history) != self.iterations_used + 1:
            raise ValueError("residual history must have one entry per iterate")


def _operator_pieces(p: FirstKindProblem, grid: Grid):
    op = p.operator(grid)
    A = op.matrix                      # k(x_i, xi_j) w_j
    Astar = op.kernel_values.T * grid.weights  # adjoint: k(xi, x) quadrature
    return A, Astar, p.f_samples(grid)


def lavrentiev_solve(p: FirstKindProblem, grid: Grid,
                     params: RegularizationParams) -> MethodResult:
    """Solve  alpha * p0(x) * psi + A psi = f  directly (p0 = 1 for the plain
    variant).  The shift makes the equation second-kind and well-posed for
    alpha > 0 as long as -alpha*p0 misses the discrete spectrum."""
    A, _, fv = _operator_pieces(p, grid)
    if params.variant == "stabilized_p0":
        if params.p0 is None:
            raise ValueError("stabilized_p0 needs the weight function p0")
        d = np.asarray(params.p0(grid.nodes), dtype=float)
        if np.any(d < 0):
            raise ValueError("p0 must be non-negative")
    else:
        d = np.ones(grid.n)
    M = np.diag(params.alpha * d) + A
    if _rcond_estimate(M) < 1e-12:
        raise SingularSystemError("shifted system singular; alpha hits a negated eigenvalue")
    psi = scipy.linalg.solve(M, fv)
    res = l2_norm(grid, A @ psi - fv)
    return MethodResult(psi, [res], 0, True,
                        {"method": "lavrentiev", "alpha": params.alpha,
                         "variant": params.variant})


def quasisolution_solve(basis: SpectralBasis, f, R: float, n_terms: int,
                        grid: Grid | None = None) -> MethodResult:
    """Minimize ||A psi - f|| over the ball ||psi|| <= R, in spectral form.

    With b_k the solution coefficients and c_k = int f e_k, the unconstrained
    minimizer is b_k = c_k lam_k.  If its norm fits in the ball it is
    returned as-is; otherwise the constraint binds and b_k(t) =
    c_k lam_k / (1 + t lam_k^2) with the multiplier t found by bisection on
    the monotone norm equation ||b(t)|| = R (60 fixed bisection steps).
    """
    from .firstkind import fourier_coefficients

    if R <= 0:
        raise ValueError("R must be positive")
    c = fourier_coefficients(basis, f, n_terms)
    lam = basis.char_numbers[: c.size]
    b_free = c * lam
    norm_free = float(np.sqrt((b_free**2).sum()))
    multiplier = 0.0
    if norm_free <= R:
        b = b_free
        binding = False
    else:
        def ball_norm(t):
            return float(np.sqrt(((c * lam / (1.0 + t * lam**2)) ** 2).sum()))

        lo, hi = 0.0, 1.0
        while ball_norm(hi) > R:
            hi *= 2.0
            if hi > 1e30:
                raise RuntimeError("failed to bracket the norm constraint")
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if ball_norm(mid) > R:
                lo = mid
            else:
                hi = mid
        multiplier = 0.5 * (lo + hi)
        b = c * lam / (1.0 + multiplier * lam**2)
        binding = True

    def psi(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for bk, ek in zip(b, basis.eigenfunctions):
            out += bk * ek(x)
        return out if out.ndim else float(out)

    solution = psi(grid.nodes) if grid is not None else psi
    # spectral residual ||A psi - f|| over the retained modes
    res = float(np.sqrt(((b / lam - c) ** 2).sum()))
    return MethodResult(solution, [res], 0, True,
                        {"method": "quasisolution", "R": R, "binding": binding,
                         "multiplier": multiplier, "coefficients": b,
                         "solution_norm": float(np.sqrt((b**2).sum()))})


def _validate_step(step: float, lo: float, hi: float, estimated: bool, label: str):
    if not lo < step < hi:
        msg = f"{label} step {step} outside admissible interval ({lo}, {hi})"
        if estimated:
            warnings.warn(msg + " (interval estimated from the discrete spectrum)")
        else:
            raise StepOutOfRangeError(msg)


def _iterate(update, psi0, grid, A, fv, stop: StoppingRule, max_iters: int,
             params_echo: dict, residual_of=None) -> MethodResult:
    psi = np.asarray(psi0, dtype=float).copy()
    resid = (lambda q: l2_norm(grid, A @ q - fv)) if residual_of is None else residual_of
    history = [resid(psi)]
    thr = stop.threshold()
    converged = False
    its = 0
    for its in range(1, max_iters + 1):
        new = update(psi, its)
        if new is None:  # normal early termination (zero gradient)
            its -= 1
            converged = True
            break
        d = l2_norm(grid, new - psi)
        psi = new
        history.append(resid(psi))
        if d <= thr:
            converged = True
            break
    return MethodResult(psi, history, its, converged, params_echo)


def fridman_iterate(p: FirstKindProblem, grid: Grid, params: IterationParams,
                    psi0) -> MethodResult:
    """Residual-correction iteration for symmetric positive-definite kernels:
    psi <- psi + step (f - A psi), convergent in the mean for
    0 < step < 2 lam_1."""
    A, _, fv = _operator_pieces(p, grid)
    lam1, estimated = _lambda1(params, A, grid)
    _validate_step(params.step, 0.0, 2.0 * lam1, estimated, "fridman")
    step = params.step
    return _iterate(lambda q, _: q + step * (fv - A @ q), psi0, grid, A, fv,
                    params.stop, params.max_iters,
                    {"method": "fridman", "step": step})


def landweber_iterate(p: FirstKindProblem, grid: Grid, params: IterationParams,
                      psi0) -> MethodResult:
    """Normal-equation iteration  psi <- (I - nu A*A) psi + nu A* f,
    admissible for 0 < nu < 2 / ||A*A||; works for nonsymmetric kernels."""
    A, Astar, fv = _operator_pieces(p, grid)
    norm_A1 = _normal_operator_norm(A, grid)
    _validate_step(params.step, 0.0, 2.0 / norm_A1, False, "landweber")
    nu = params.step
    f1 = Astar @ fv

    def update(q, _):
        return q - nu * (Astar @ (A @ q)) + nu * f1

    return _iterate(update, psi0, grid, A, fv, params.stop, params.max_iters,
                    {"method": "landweber", "nu": nu, "norm_A1": norm_A1})


def averaged_iterate(p: FirstKindProblem, grid: Grid, params: IterationParams,
                     phi0) -> MethodResult:
    """Running average of the unit-step residual-correction sequence
    phi_n = phi_{n-1} + f - A phi_{n-1}; returns psi_m = mean(phi_0..phi_m)."""
    A, _, fv = _operator_pieces(p, grid)
    lam1, estimated = _lambda1(params, A, grid)
    _validate_step(1.0, 0.0, 2.0 * lam1, estimated, "averaged (unit)")
    state = {"phi": np.asarray(phi0, dtype=float).copy(), "acc": None, "m": 0}
    state["acc"] = state["phi"].copy()

    def update(_, __):
        state["phi"] = state["phi"] + (fv - A @ state["phi"])
        state["acc"] = state["acc"] + state["phi"]
        state["m"] += 1
        return state["acc"] / (state["m"] + 1)

    return _iterate(update, phi0, grid, A, fv, params.stop, params.max_iters,
                    {"method": "averaged"})


def implicit_iterate(p: FirstKindProblem, grid: Grid, params: IterationParams,
                     psi0) -> MethodResult:
    """Implicit shifted iteration: solve (alpha I + A) psi_{n+1} = alpha psi_n + f
    each step.  In contrast to the small-alpha direct shift, this tolerates a
    large alpha, trading step count for per-step contraction
    alpha lam / (alpha lam + 1) per mode."""
    if params.step <= 0:
        raise StepOutOfRangeError("implicit iteration needs alpha > 0")
    A, _, fv = _operator_pieces(p, grid)
    alpha = params.step
    M = alpha * np.eye(grid.n) + A
    if _rcond_estimate(M) < 1e-12:
        raise SingularSystemError("shifted system singular")
    lu = scipy.linalg.lu_factor(M)

    def update(q, _):
        return scipy.linalg.lu_solve(lu, alpha * q + fv)

    return _iterate(update, psi0, grid, A, fv, params.stop, params.max_iters,
                    {"method": "implicit", "alpha": alpha})


def steepest_descent_iterate(p: FirstKindProblem, grid: Grid,
                             params: IterationParams, psi0) -> MethodResult:
    """psi <- psi - beta A*(A psi - f) with the exact line-search step
    beta = ||A* r||^2 / ||A A* r||^2; the residual is non-increasing.
    A vanishing gradient is normal termination."""
    A, Astar, fv = _operator_pieces(p, grid)

    def update(q, _):
        g = Astar @ (A @ q - fv)
        gn = l2_norm(grid, g)
        if gn < params.stop.fallback_tol:
            return None
        Ag = A @ g
        beta = gn**2 / l2_norm(grid, Ag) ** 2
        return q - beta * g

    return _iterate(update, psi0, grid, A, fv, params.stop, params.max_iters,
                    {"method": "steepest_descent"})


def _lambda1(params: IterationParams, A: np.ndarray, grid: Grid):
    """Smallest characteristic number: caller-supplied, else 1 / (largest
    eigenvalue of the discrete operator), flagged as estimated."""
    if params.lambda1 is not None:
        return float(params.lambda1), False
    s = np.sqrt(grid.weights)
    sym = (A / grid.weights) * np.outer(s, s)  # similarity to the symmetric form
    ev = np.linalg.eigvalsh(0.5 * (sym + sym.T)).max()
    if ev <= 0:
        raise ValueError("discrete operator has no positive eigenvalue")
    return 1.0 / ev, True


def _normal_operator_norm(A: np.ndarray, grid: Grid) -> float:
    """Spectral norm of A*A in the weighted inner product (via the symmetric
    similarity  W^1/2 K^T W K W^1/2  with K the kernel values)."""
    w = grid.weights
    s = np.sqrt(w)
    K = A / w
    S = (s[:, None] * K.T) * w[None, :] @ (K * s[None, :])
    return float(np.linalg.eigvalsh(0.5 * (S + S.T)).max())


@dataclass(eq=False)
class ModeDiagnostic:
    """Per-mode Fourier trajectories of an iterate history and the fitted
    contraction ratio of each mode (ratio of successive coefficient
    differences; a stalled mode reports 1)."""

    coefficients: np.ndarray  # (n_iterates, n_modes)
    ratios: np.ndarray


def mode_diagnostic(basis: SpectralBasis, history, grid: Grid,
                    n_modes: int | None = None) -> ModeDiagnostic:
    m = min(len(basis), n_modes or 8)
    E = np.array([basis.evaluate(k, grid.nodes) for k in range(m)])
    coeffs = np.array([(E * grid.weights) @ np.asarray(h, dtype=float) for h in history])
    ratios = np.ones(m)
    scale = max(np.abs(coeffs).max(), 1.0)
    for k in range(m):
        d = np.diff(coeffs[:, k])
        peak = np.abs(d).max() if d.size else 0.0
        if peak <= 1e-12 * scale:
            continue  # stalled mode: convention ratio = 1
        # only steps whose increment is still signal, not cross-mode leakage
        valid = np.abs(d[:-1]) > 1e-8 * peak
        if valid.any():
            r = np.abs(d[1:][valid]) / np.abs(d[:-1][valid])
            ratios[k] = float(np.median(r))
    return ModeDiagnostic(coeffs, ratios)


def perlin_deflate(f_samples, eigfun_samples, grid: Grid) -> np.ndarray:
    """Remove the component of f along a (normalized) eigenfunction:
    f - e * int f e.  Deflating the right-hand side off a spectral direction
    stabilizes second-kind solves positioned on the spectrum."""
    f_samples = np.asarray(f_samples, dtype=float)
    e = np.asarray(eigfun_samples, dtype=float)
    nrm2 = float(e @ (grid.weights * e))
    if nrm2 < 1e-24:
        raise ValueError("eigenfunction samples have (near-)zero norm")
    proj = float(f_samples @ (grid.weights * e)) / nrm2
    return f_samples - proj * e
