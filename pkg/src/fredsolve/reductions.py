"""Reducers from boundary-value / initial-boundary-value problems to integral
equations.

The common device: name the highest x-derivative psi, integrate it back with
undetermined constants (or functions of the other variable), and absorb the
boundary conditions into the representation.  One-dimensional two-point
problems land on well-posed second-kind equations; two-dimensional problems
land on first-kind equations coupling an x-slice and a y-slice operator,
which the transform module can then take over.  Every reconstructor satisfies
its designated boundary conditions identically, whatever the accuracy of
psi, because the conditions are built into the representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .grids import Grid, l2_norm, volterra_weights

__all__ = [
    "SeparatedBC",
    "OdeBvp",
    "OdeReduction",
    "ReducedFirstKind2D",
    "ClosureEstimate",
    "ode_bvp_reduce",
    "poisson2d_reduce",
    "boundary_symmetrize",
    "heat_reduce",
    "convection_diffusion_reduce",
    "tricomi_reduce",
    "ConvectionDiffusionReduction",
    "EpsilonExpansion",
]


# ---------------------------------------------------------------------------
# ordinary two-point problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparatedBC:
    """alpha0 u(0) + beta0 u'(0) = g0  and  alpha1 u(1) + beta1 u'(1) = g1."""

    alpha0: float = 0.0
    beta0: float = 1.0
    g0: float = 0.0
    alpha1: float = 1.0
    beta1: float = 0.0
    g1: float = 0.0


@dataclass(eq=False)
class OdeBvp:
    """u'' - a(x) u = f(x) on [0, 1] with separated linear conditions."""

    a: object
    f: object
    bc: SeparatedBC = field(default_factory=SeparatedBC)


@dataclass(eq=False)
class OdeReduction:
    """Discrete reduction of an OdeBvp.  Exposes two algebraically equivalent
    routes: ``solve()`` eliminates the integration constants into the kernel
    and solves one dense second-kind system; ``solve_volterra()`` solves the
    inner Volterra equation per right-hand side and fixes the constants from
    the boundary conditions afterwards.  Both produce the same (psi, u) up to
    roundoff."""

    grid: Grid
    kernel_action: np.ndarray      # weights included; psi = coef*(G psi) + rhs
    rhs: np.ndarray
    u_action: np.ndarray           # u = u_action @ psi + u_offset
    u_offset: np.ndarray
    _volterra: np.ndarray = field(repr=False, default=None)
    _coef: np.ndarray = field(repr=False, default=None)
    _pieces: dict = field(repr=False, default=None)

    def solve(self) -> tuple:
        A = np.eye(self.grid.n) - self.kernel_action
        psi = scipy.linalg.solve(A, self.rhs)
        return psi, self.reconstruct(psi)

    def solve_volterra(self) -> tuple:
        pz = self._pieces
        I = np.eye(self.grid.n)
        lu = scipy.linalg.lu_factor(I - self._volterra)
        psi_parts = [scipy.linalg.lu_solve(lu, rhs) for rhs in pz["volterra_rhs"]]
        # constants from the boundary rows, with psi = psi_f + c0 psi_b0 + c1 psi_b1
        C = pz["bc_matrix"].copy()
        g = pz["bc_rhs"].copy()
        mom = pz["moment_row"]
        # moment_row @ psi enters the second bc row; expand in the constants
        g = g - np.array([0.0, mom @ psi_parts[0]])
        C = C + np.array([[0.0, 0.0], [mom @ psi_parts[1], mom @ psi_parts[2]]])
        c = np.linalg.solve(C, g)
        psi = psi_parts[0] + c[0] * psi_parts[1] + c[1] * psi_parts[2]
        u = pz["rep"] @ psi + c[0] * pz["b0"] + c[1] * pz["b1"]
        return psi, u

    def reconstruct(self, psi) -> np.ndarray:
        return self.u_action @ np.asarray(psi, dtype=float) + self.u_offset

    def boundary_residuals(self, psi) -> tuple:
        """Defects of the two boundary conditions evaluated through the
        representation itself; zero up to roundoff for any psi whatsoever,
        because the constants are always eliminated exactly."""
        pz = self._pieces
        psi = np.asarray(psi, dtype=float)
        c = pz["c_const"] + pz["c_psi"] @ psi
        bc = pz["bc"]
        u0 = c[0] * pz["b0"][0] + c[1] * pz["b1"][0]
        du0 = c[0] * pz["b0d"][0] + c[1] * pz["b1d"][0]
        u1 = pz["rep"][-1] @ psi + c[0] * pz["b0"][-1] + c[1] * pz["b1"][-1]
        du1 = pz["rep_d"][-1] @ psi + c[0] * pz["b0d"][-1] + c[1] * pz["b1d"][-1]
        return (bc.alpha0 * u0 + bc.beta0 * du0 - bc.g0,
                bc.alpha1 * u1 + bc.beta1 * du1 - bc.g1)

    def as_second_kind(self):
        """The same dense system reframed as a one-block SecondKindProblem
        (kernel = action matrix with the column weights divided back out)."""
        from .secondkind import SecondKindProblem

        return SecondKindProblem([[self.kernel_action / self.grid.weights]],
                                 [self.grid], 1.0, [self.rhs])


def ode_bvp_reduce(p: OdeBvp, grid: Grid, shift: bool = False) -> OdeReduction:
    """Reduce u'' - a u = f to a second-kind equation for psi.

    shift=False names psi = u'' and represents u by double integration of
    psi plus c1 x + c0.  shift=True names psi = u'' + u (representation
    through sin/cos), which keeps both constants available when the plain
    representation cannot satisfy the conditions (e.g. Neumann-Neumann).
    """
    x = grid.nodes
    V = volterra_weights(x)
    bc = p.bc
    av = np.asarray(p.a(x), dtype=float)
    fv = np.asarray(p.f(x), dtype=float)
    if not (np.all(np.isfinite(av)) and np.all(np.isfinite(fv))):
        raise ValueError("a and f must be finite on [0, 1]")

    if shift:
        rep = V * np.sin(x[:, None] - x[None, :])       # u part from psi
        rep_d = V * np.cos(x[:, None] - x[None, :])     # u' part
        b0, b1 = np.cos(x), np.sin(x)
        b0d, b1d = -np.sin(x), np.cos(x)
        coef = 1.0 + av                                  # psi = (1+a) u + f
    else:
        rep = V * (x[:, None] - x[None, :])
        rep_d = V.copy()
        b0, b1 = np.ones_like(x), x.copy()
        b0d, b1d = np.zeros_like(x), np.ones_like(x)
        coef = av

    # boundary rows: row0 involves only the constants (rep parts vanish at 0)
    C = np.array([
        [bc.alpha0 * b0[0] + bc.beta0 * b0d[0], bc.alpha0 * b1[0] + bc.beta0 * b1d[0]],
        [bc.alpha1 * b0[-1] + bc.beta1 * b0d[-1], bc.alpha1 * b1[-1] + bc.beta1 * b1d[-1]],
    ])
    if abs(np.linalg.det(C)) < 1e-12:
        raise ValueError("boundary conditions unsupported by this representation; "
                         "try shift=True")
    moment = bc.alpha1 * rep[-1, :] + bc.beta1 * rep_d[-1, :]
    g = np.array([bc.g0, bc.g1])
    Cinv = np.linalg.inv(C)
    # c = Cinv @ (g - [0, moment @ psi]);  split constant and psi-linear parts
    c_const = Cinv @ g
    c_psi = -np.outer(Cinv[:, 1], moment)               # 2 x n
    u_action = rep + np.outer(b0, c_psi[0]) + np.outer(b1, c_psi[1])
    u_offset = c_const[0] * b0 + c_const[1] * b1
    kernel_action = coef[:, None] * u_action
    rhs = fv + coef * u_offset

    pieces = {
        "volterra_rhs": [fv + coef * 0.0, coef * b0, coef * b1],
        "bc_matrix": C,
        "bc_rhs": g,
        "moment_row": moment,
        "rep": rep,
        "rep_d": rep_d,
        "b0": b0,
        "b1": b1,
        "b0d": b0d,
        "b1d": b1d,
        "c_const": c_const,
        "c_psi": c_psi,
        "bc": bc,
    }
    # route 1 inner equation: psi = coef * (rep psi) + [f | coef b0 | coef b1]
    return OdeReduction(grid, kernel_action, rhs, u_action, u_offset,
                        _volterra=coef[:, None] * rep, _coef=coef, _pieces=pieces)


# ---------------------------------------------------------------------------
# two-dimensional reductions
# ---------------------------------------------------------------------------

def bracket_matrix(grid: Grid) -> np.ndarray:
    """Discrete action of  int_0^x (x-xi) . dxi - x int_0^1 (1-xi) . dxi,
    the double-integration representation pinned to u(0) = u(1) = 0."""
    x = grid.nodes
    T = volterra_weights(x) * (x[:, None] - x[None, :])
    return T - np.outer(x, grid.weights * (1.0 - x))


@dataclass(eq=False)
class ReducedFirstKind2D:
    """First-kind problem  (A psi)(x, y) = int tau1(x,y,xi) psi(xi,y) dxi
    + int tau2(x,y,eta) psi(x,eta) deta = f(x,y)  with slice operators given
    by dense matrix builders (weights included)."""

    tau1: object
    tau2: object | None
    f: object
    domain_x: tuple = (0.0, 1.0)
    domain_y: tuple = (0.0, 1.0)
    x_matrix: object = None        # grid -> matrix acting on psi(:, j)
    y_matrix: object = None        # grid -> matrix acting on psi(i, :)
    reconstructors: dict = field(default_factory=dict)

    def operator_action(self, grid_x: Grid, grid_y: Grid) -> np.ndarray:
        n2 = grid_x.n * grid_y.n
        act = np.zeros((n2, n2))
        if self.x_matrix is not None:
            act += np.kron(self.x_matrix(grid_x), np.eye(grid_y.n))
        if self.y_matrix is not None:
            act += np.kron(np.eye(grid_x.n), self.y_matrix(grid_y))
        return act

    def f_values(self, grid_x: Grid, grid_y: Grid) -> np.ndarray:
        X, Y = np.meshgrid(grid_x.nodes, grid_y.nodes, indexing="ij")
        return np.asarray(self.f(X, Y), dtype=float)

    def apply(self, psi: np.ndarray, grid_x: Grid, grid_y: Grid) -> np.ndarray:
        out = np.zeros_like(psi)
        if self.x_matrix is not None:
            out += self.x_matrix(grid_x) @ psi
        if self.y_matrix is not None:
            out += psi @ self.y_matrix(grid_y).T
        return out

    def residual(self, psi: np.ndarray, grid_x: Grid, grid_y: Grid,
                 norm: str = "max") -> float:
        r = self.apply(psi, grid_x, grid_y) - self.f_values(grid_x, grid_y)
        if norm == "max":
            return float(np.abs(r).max())
        W = np.outer(grid_x.weights, grid_y.weights)
        return float(np.sqrt((W * r * r).sum()))


def poisson2d_reduce(load=None) -> ReducedFirstKind2D:
    """-Laplace u = load on the unit square, homogeneous Dirichlet.

    psi = dxx u; the x- and y-representations each satisfy one pair of
    boundary conditions identically, and eliminating u couples them into a
    first-kind equation.  load defaults to 1 (uniform membrane pressure),
    for which the free term is y(1-y)/2 in closed form.
    """
    if load is None:
        def f(x, y):
            return 0.5 * y * (1.0 - y)

        load_fn = lambda x, y: np.ones_like(np.asarray(x, dtype=float) * np.asarray(y, dtype=float))
    else:
        load_fn = load

        def f(x, y, _cache={}):
            # f = -G_y load, via a fine fixed quadrature in eta
            from .grids import build_grid

            g = _cache.setdefault("g", build_grid(0.0, 1.0, "gauss_legendre", 64))
            xn, wn = g.nodes, g.weights
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            shape = np.broadcast(x, y).shape
            xb = np.broadcast_to(x, shape)
            yb = np.broadcast_to(y, shape)
            out = np.zeros(shape)
            flat = out.reshape(-1)
            for idx, (xv, yv) in enumerate(zip(xb.reshape(-1), yb.reshape(-1))):
                # inner integral mapped onto [0, yv] so the integrand is smooth
                q_in = np.asarray(load_fn(xv * np.ones_like(xn), yv * xn), dtype=float)
                inner = yv**2 * ((1.0 - xn) * wn) @ q_in
                q_full = np.asarray(load_fn(xv * np.ones_like(xn), xn), dtype=float)
                flat[idx] = -(inner - yv * ((1 - xn) * wn) @ q_full)
            return out if out.ndim else float(out)

    def tau1(x, y, xi):
        x, xi = np.asarray(x, dtype=float), np.asarray(xi, dtype=float)
        return np.where(xi <= x, x - xi, 0.0) - x * (1.0 - xi)

    def tau2(x, y, eta):
        y, eta = np.asarray(y, dtype=float), np.asarray(eta, dtype=float)
        return np.where(eta <= y, y - eta, 0.0) - y * (1.0 - eta)

    red = ReducedFirstKind2D(tau1, tau2, f, x_matrix=bracket_matrix,
                             y_matrix=bracket_matrix)

    def u_from_x(psi, grid_x, grid_y):
        return bracket_matrix(grid_x) @ psi

    def u_from_y(psi, grid_x, grid_y):
        X, Y = np.meshgrid(grid_x.nodes, grid_y.nodes, indexing="ij")
        if load is None:
            qs = np.ones_like(psi)
        else:
            qs = np.asarray(load_fn(X, Y), dtype=float)
        return -(bracket_matrix(grid_y) @ (qs + psi).T).T

    red.reconstructors = {"from_x": u_from_x, "from_y": u_from_y}
    return red


@dataclass(eq=False)
class ClosureEstimate:
    """delta = 2 ||U1 - U2|| / ||U1 + U2||, the relative mismatch of the two
    independent reconstructions after pinning all four boundary conditions."""

    delta: float
    u1_samples: np.ndarray
    u2_samples: np.ndarray

    def recompute(self, grid_x: Grid | None = None, grid_y: Grid | None = None) -> float:
        return _closure_delta(self.u1_samples, self.u2_samples, grid_x, grid_y)


def _closure_delta(U1, U2, grid_x=None, grid_y=None) -> float:
    if grid_x is not None and grid_y is not None:
        W = np.outer(grid_x.weights, grid_y.weights)
        num = np.sqrt((W * (U1 - U2) ** 2).sum())
        den = np.sqrt((W * (U1 + U2) ** 2).sum())
    else:
        num = np.linalg.norm(U1 - U2)
        den = np.linalg.norm(U1 + U2)
    return float(2.0 * num / den) if den > 0 else 0.0


def boundary_symmetrize(u1: np.ndarray, u2: np.ndarray, grid_x: Grid | None = None,
                        grid_y: Grid | None = None):
    """Pin the remaining boundary pair on each reconstruction:

        U1 = u1 - (1-y) u1(x,0) - y u1(x,1)
        U2 = u2 - (1-x) u2(0,y) - x u2(1,y)

    and return (U1, U2, ClosureEstimate).  Needs both fields on one grid;
    the y (resp. x) coordinate is assumed affine on [0, 1] along the axis.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape != u2.shape:
        raise ValueError("reconstructions must share a grid")
    ny = u1.shape[1]
    nx = u1.shape[0]
    y = (np.linspace(0.0, 1.0, ny) if grid_y is None
         else (grid_y.nodes - grid_y.a) / (grid_y.b - grid_y.a))
    x = (np.linspace(0.0, 1.0, nx) if grid_x is None
         else (grid_x.nodes - grid_x.a) / (grid_x.b - grid_x.a))
    U1 = u1 - np.outer(np.ones(nx), 1 - y) * u1[:, :1] - np.outer(np.ones(nx), y) * u1[:, -1:]
    U2 = u2 - np.outer(1 - x, np.ones(ny)) * u2[:1, :] - np.outer(x, np.ones(ny)) * u2[-1:, :]
    est = ClosureEstimate(_closure_delta(U1, U2, grid_x, grid_y), U1, U2)
    return U1, U2, est


def heat_reduce(u0, T: float = 1.0) -> ReducedFirstKind2D:
    """Heat conduction  du/dt = dxx u,  u(x,0) = u0(x),  u(0,t) = u(1,t) = 0.

    With psi = dxx u the spatial bracket gives one representation of u and
    time integration the other; eliminating u:

        [bracket_x] psi(., t) - int_0^t psi(x, eta) deta = u0(x).
    """
    u0v = np.asarray(u0(np.array([0.0, 1.0])), dtype=float)
    if max(abs(u0v[0]), abs(u0v[1])) > 1e-10:
        raise ValueError("u0 must vanish at both ends")

    def tau2(x, t, eta):
        t, eta = np.asarray(t, dtype=float), np.asarray(eta, dtype=float)
        return np.where(eta <= t, -1.0, 0.0)

    def tau1(x, y, xi):
        x, xi = np.asarray(x, dtype=float), np.asarray(xi, dtype=float)
        return np.where(xi <= x, x - xi, 0.0) - x * (1.0 - xi)

    red = ReducedFirstKind2D(
        tau1, tau2,
        f=lambda x, t: np.asarray(u0(np.asarray(x, dtype=float)), dtype=float) * np.ones_like(np.asarray(t, dtype=float)),
        domain_y=(0.0, T),
        x_matrix=bracket_matrix,
        y_matrix=lambda g: -volterra_weights(g.nodes),
    )

    def u_from_space(psi, grid_x, grid_t):
        return bracket_matrix(grid_x) @ psi

    def u_from_time(psi, grid_x, grid_t):
        return (volterra_weights(grid_t.nodes) @ psi.T).T + \
            np.asarray(u0(grid_x.nodes), dtype=float)[:, None]

    red.reconstructors = {"from_space": u_from_space, "from_time": u_from_time}
    return red


def tricomi_reduce(nu) -> ReducedFirstKind2D:
    """Mixed-type model  y dxx u + dyy u = 0  on [0,1] x [-1,1] with
    u(0,y) = u(1,y) = u(x,-1) = 0 and u(x,1) = nu(x), nu(0) = nu(1) = 0.

    psi = dxx u; twofold y-integration of dyy u = -y psi gives the second
    representation, and elimination yields

        [bracket_x] psi + [int_{-1}^y (y-eta) - (1+y)/2 int_{-1}^1 (1-eta)] eta psi
            = (1+y) nu(x) / 2.

    u and du/dy stay continuous across y = 0 by construction of the
    y-representation (the mixed-type matching condition).
    """
    ends = np.asarray(nu(np.array([0.0, 1.0])), dtype=float)
    if max(abs(ends[0]), abs(ends[1])) > 1e-10:
        raise ValueError("nu must vanish at x = 0 and x = 1")

    def y_mat(g: Grid) -> np.ndarray:
        y = g.nodes
        Vy = volterra_weights(y)
        M = Vy * (y[:, None] - y[None, :]) * y[None, :]
        M -= np.outer((1.0 + y) / 2.0, g.weights * (1.0 - y) * y)
        return M

    def tau1(x, y, xi):
        x, xi = np.asarray(x, dtype=float), np.asarray(xi, dtype=float)
        return np.where(xi <= x, x - xi, 0.0) - x * (1.0 - xi)

    def tau2(x, y, eta):
        y, eta = np.asarray(y, dtype=float), np.asarray(eta, dtype=float)
        return (np.where(eta <= y, y - eta, 0.0) - (1.0 + y) / 2.0 * (1.0 - eta)) * eta

    red = ReducedFirstKind2D(
        tau1, tau2,
        f=lambda x, y: 0.5 * (1.0 + np.asarray(y, dtype=float)) * np.asarray(nu(np.asarray(x, dtype=float)), dtype=float),
        domain_y=(-1.0, 1.0),
        x_matrix=bracket_matrix,
        y_matrix=y_mat,
    )

    def u_from_x(psi, grid_x, grid_y):
        return bracket_matrix(grid_x) @ psi

    def u_from_y(psi, grid_x, grid_y):
        f2d = red.f_values(grid_x, grid_y)
        return f2d - psi @ y_mat(grid_y).T

    red.reconstructors = {"from_x": u_from_x, "from_y": u_from_y}
    return red


# ---------------------------------------------------------------------------
# singular perturbation: convection-diffusion
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ConvectionDiffusionReduction:
    """Heat transport  du/dt = eps dxx u + beta dx u  with u = 0 initially and
    at x = 0, and u(1, t) = u1(t).  The reduction splits the first-kind
    operator as A = eps A1 + A2 with the small parameter only on A1, so the
    transform of the problem is a regular perturbation in eps."""

    epsilon: float
    beta: float
    u1: object

    def a1_action(self, grid_x: Grid, grid_t: Grid) -> np.ndarray:
        return np.kron(np.eye(grid_x.n), volterra_weights(grid_t.nodes))

    def a2_action(self, grid_x: Grid, grid_t: Grid) -> np.ndarray:
        x = grid_x.nodes
        Vx = volterra_weights(x)
        Gc = Vx * (x[:, None] - x[None, :]) - np.outer(np.ones(grid_x.n),
                                                       grid_x.weights * (1.0 - x))
        return (self.beta * np.kron(Vx, volterra_weights(grid_t.nodes))
                - np.kron(Gc, np.eye(grid_t.n)))

    def operator_action(self, grid_x: Grid, grid_t: Grid) -> np.ndarray:
        return self.epsilon * self.a1_action(grid_x, grid_t) + self.a2_action(grid_x, grid_t)

    def f_values(self, grid_x: Grid, grid_t: Grid) -> np.ndarray:
        tv = np.asarray(self.u1(grid_t.nodes), dtype=float)
        return np.ones(grid_x.n)[:, None] * tv[None, :]

    def epsilon_expansion(self, config, grid_x: Grid, grid_t: Grid,
                          n_orders: int = 3) -> "EpsilonExpansion":
        """Per-order problems of the expansion chi = sum eps^m chi_m applied
        to the transformed system: the zero-order system carries A2 only and
        every correction order solves the same matrix with the coupling of A1
        applied to the previous order."""
        from .transform import transform_2d_coupling, transform_2d_system

        A1 = self.a1_action(grid_x, grid_t)
        A2 = self.a2_action(grid_x, grid_t)
        S0, Hx = transform_2d_system(A2, grid_x, grid_t, config)
        D = transform_2d_coupling(A1, Hx, config.mu)
        n2 = grid_x.n * grid_t.n
        rhs = np.concatenate([config.mu * self.f_values(grid_x, grid_t).ravel(),
                              np.zeros(n2)])
        lu = scipy.linalg.lu_factor(S0)
        orders = [scipy.linalg.lu_solve(lu, rhs)]
        for _ in range(n_orders):
            orders.append(scipy.linalg.lu_solve(lu, config.mu * (D @ orders[-1])))
        S_full, _ = transform_2d_system(A2 + self.epsilon * A1, grid_x, grid_t, config)
        partial = sum(self.epsilon**m * X for m, X in enumerate(orders))
        tel = float(np.linalg.norm(S_full @ partial - rhs) / max(np.linalg.norm(rhs), 1e-300))
        return EpsilonExpansion(orders, partial, tel)


@dataclass(eq=False)
class EpsilonExpansion:
    orders: list
    partial_sum: np.ndarray
    telescope_residual: float


def convection_diffusion_reduce(epsilon: float, beta: float, u1) -> ConvectionDiffusionReduction:
    if beta <= 0:
        raise ValueError("beta must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    return ConvectionDiffusionReduction(epsilon, beta, u1)
