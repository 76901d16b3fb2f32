"""Config-driven benchmark harness.

An experiment is one JSON document: a problem, a grid, a list of method
specs, and a list of noise levels.  Every (method, noise) pair becomes one
run; runs are pure given the seed, so they may execute in any order or in
parallel, and the emitted CSV is byte-identical across runs and job counts.

Config schema (see README for the full description):

    {
      "problem": {"kind": "eigen_test", "m": 1},
      "grid":    {"rule": "simpson", "n": 129},
      "methods": [{"method": "lavrentiev", "alpha": 1e-3}, ...],
      "noise":   [{"delta_rel": 0.01, "seed": 7, "kind": "white_fourier", "modes": 3}],
      "seed": 42
    }

The CSV wall_ms column is written as 0 so that outputs stay byte-identical
across hosts and runs; measured wall times live on the in-memory records.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .classical import (IterationParams, RegularizationParams, StoppingRule,
                        averaged_iterate, fridman_iterate, implicit_iterate,
                        landweber_iterate, lavrentiev_solve, quasisolution_solve,
                        steepest_descent_iterate)
from .firstkind import (FirstKindProblem, NoiseSpec, eigen_test_problem,
                        inject_noise, picard_solve, residual_norm)
from .grids import Grid, build_grid, l2_norm
from .kernels import canonical_spectrum
from .transform import TransformConfig, solve_single_equation, solve_transform

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "load_config",
    "run_experiment",
    "emit_csv",
    "emit_profile",
    "CSV_HEADER",
]

CSV_HEADER = "method,param_summary,delta,rel_error,residual,iterations,wall_ms,converged"


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    grid: dict
    methods: tuple
    noise: tuple
    seed: int = 0

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")


@dataclass(eq=False)
class RunRecord:
    method: str
    param_summary: str
    delta: float
    rel_solution_error: float  # nan when no exact solution is known
    residual: float
    iterations: int
    wall_time: float
    converged: bool
    solution: np.ndarray = None
    grid: Grid = None


def load_config(source) -> ExperimentConfig:
    """Parse a config from a dict, JSON string, or file path."""
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        if not str(source).lstrip().startswith("{"):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        doc = json.loads(text)
    noise = doc.get("noise") or [{"delta": 0.0}]
    return ExperimentConfig(
        problem=doc.get("problem", {"kind": "eigen_test", "m": 1}),
        grid=doc.get("grid", {"rule": "simpson", "n": 129}),
        methods=tuple(dict(m) for m in doc["methods"]),
        noise=tuple(dict(nz) for nz in noise),
        seed=int(doc.get("seed", 0)),
    )


def _build_problem(spec: dict) -> FirstKindProblem:
    kind = spec.get("kind", "eigen_test")
    if kind == "eigen_test":
        return eigen_test_problem(int(spec.get("m", 1)))
    if kind == "custom":
        # named kernels with a single-mode manufactured right-hand side
        name = spec.get("kernel", "triangular")
        m = int(spec.get("mode", 1))
        if name == "triangular":
            return eigen_test_problem(m)
        if name == "poisson":
            from .kernels import PoissonKernelSpec, poisson_h

            r = float(spec.get("r", 0.5))
            hk = PoissonKernelSpec(r)
            return FirstKindProblem(
                kernel=lambda x, xi, hk=hk: poisson_h(x, xi, hk),
                f=lambda x, r=r, m=m: r**m * np.cos(2 * m * np.pi * np.asarray(x, dtype=float)),
                exact_solution=lambda x, m=m: np.cos(2 * m * np.pi * np.asarray(x, dtype=float)),
            )
        raise ValueError(f"unknown kernel reference {name!r}")
    raise ValueError(f"unknown problem kind {kind!r}")


def _build_grid(spec: dict) -> Grid:
    return build_grid(float(spec.get("a", 0.0)), float(spec.get("b", 1.0)),
                      spec.get("rule", "simpson"), int(spec.get("n", 129)))


def _noise_spec(nz: dict, f_norm: float, default_seed: int) -> NoiseSpec:
    if "delta_rel" in nz:
        target = float(nz["delta_rel"]) * f_norm
    else:
        target = float(nz.get("delta", 0.0))
    return NoiseSpec(target_l2_norm=target, seed=int(nz.get("seed", default_seed)),
                     kind=nz.get("kind", "white_fourier"), modes=int(nz.get("modes", 3)))


def _param_summary(m: dict) -> str:
    items = [f"{k}={m[k]}" for k in sorted(m) if k != "method"]
    return ";".join(items) if items else "-"


def _stop_rule(m: dict, delta: float) -> StoppingRule:
    return StoppingRule(c1=float(m.get("c1", 1.0 if delta > 0 else 0.0)),
                        c2=float(m.get("c2", 0.0)),
                        delta=delta, gamma=float(m.get("gamma", 0.0)),
                        fallback_tol=float(m.get("fallback_tol", 1e-10)))


def _execute_run(problem_spec: dict, grid_spec: dict, method_spec: dict,
                 noise_spec: dict, seed: int) -> RunRecord:
    if problem_spec.get("kind") == "ode_bvp_cos":
        return _execute_ode_run(grid_spec, method_spec)
    problem = _build_problem(problem_spec)
    grid = _build_grid(grid_spec)
    fv_clean = problem.f_samples(grid)
    nspec = _noise_spec(noise_spec, l2_norm(grid, fv_clean), seed)
    fv = inject_noise(fv_clean, nspec, grid)
    noisy = FirstKindProblem(problem.kernel,
                             lambda x, g=grid, v=fv: np.interp(x, g.nodes, v),
                             problem.domain, problem.exact_solution)
    # solvers consume nodal samples through the grid, so the interpolating
    # closure above is only exercised at the nodes and is exact there
    name = method_spec["method"]
    t0 = time.perf_counter()
    iterations = 0
    converged = True
    psi = None
    if name == "lavrentiev":
        res = lavrentiev_solve(noisy, grid, RegularizationParams(float(method_spec.get("alpha", 1e-3))))
        psi, iterations, converged = res.solution, res.iterations_used, res.converged
    elif name == "picard":
        basis = canonical_spectrum("triangular")
        psi = picard_solve(basis, noisy.f, int(method_spec.get("n_terms", 10)))(grid.nodes)
    elif name == "quasisolution":
        basis = canonical_spectrum("triangular")
        res = quasisolution_solve(basis, noisy.f, float(method_spec.get("R", 1.0)),
                                  int(method_spec.get("n_terms", 10)), grid=grid)
        psi, iterations, converged = res.solution, res.iterations_used, res.converged
    elif name in ("fridman", "landweber", "averaged", "implicit", "steepest_descent"):
        params = IterationParams(
            scheme=name,
            step=float(method_spec.get("step", 1.0)),
            max_iters=int(method_spec.get("max_iters", 5000)),
            stop=_stop_rule(method_spec, nspec.target_l2_norm),
            lambda1=method_spec.get("lambda1"),
        )
        psi0 = np.zeros(grid.n)
        fn = {"fridman": fridman_iterate, "landweber": landweber_iterate,
              "averaged": averaged_iterate, "implicit": implicit_iterate,
              "steepest_descent": steepest_descent_iterate}[name]
        res = fn(noisy, grid, params, psi0)
        psi, iterations, converged = res.solution, res.iterations_used, res.converged
    elif name in ("transform", "transform_single"):
        cfg = TransformConfig(r=float(method_spec.get("r", 0.5)),
                              mu=float(method_spec.get("mu", 0.3)),
                              n_resolvent_terms=int(method_spec.get("n_terms", 60)),
                              grid=grid)
        if name == "transform":
            res = solve_transform(noisy, cfg, method=method_spec.get("solve", "direct"))
        else:
            res = solve_single_equation(noisy, cfg, variant=method_spec.get("variant", "additive"))
        psi = res.psi1
        converged = res.system_residual <= 1e-8
    else:
        raise ValueError(f"unknown method {name!r}")
    wall = time.perf_counter() - t0

    residual = residual_norm(noisy, psi, grid)
    rel_err = float("nan")
    if problem.exact_solution is not None:
        exact = np.asarray(problem.exact_solution(grid.nodes), dtype=float)
        rel_err = l2_norm(grid, psi - exact) / max(l2_norm(grid, exact), 1e-300)
    return RunRecord(name, _param_summary(method_spec), nspec.target_l2_norm,
                     rel_err, residual, iterations, wall, bool(converged),
                     solution=np.asarray(psi, dtype=float), grid=grid)


def _execute_ode_run(grid_spec: dict, method_spec: dict) -> RunRecord:
    """Reduced boundary-value benchmark: u'' - u = -(pi^2/4 + 1) cos(pi x / 2)
    with a mixed condition pair, exact solution cos(pi x / 2).  Solved through
    the integral reduction on either route."""
    from .reductions import OdeBvp, ode_bvp_reduce

    if method_spec.get("method") != "ode_reduction":
        raise ValueError("the reduced BVP problem supports only the ode_reduction method")
    grid = _build_grid(grid_spec)
    p = OdeBvp(a=lambda x: np.ones_like(x),
               f=lambda x: -(np.pi**2 / 4 + 1) * np.cos(np.pi * x / 2))
    red = ode_bvp_reduce(p, grid)
    t0 = time.perf_counter()
    route = method_spec.get("route", "fredholm")
    psi, u = red.solve() if route == "fredholm" else red.solve_volterra()
    wall = time.perf_counter() - t0
    exact = np.cos(np.pi * grid.nodes / 2)
    rel = l2_norm(grid, u - exact) / l2_norm(grid, exact)
    sys_res = float(np.linalg.norm((np.eye(grid.n) - red.kernel_action) @ psi - red.rhs))
    return RunRecord("ode_reduction", _param_summary(method_spec), 0.0, rel,
                     sys_res, 0, wall, True, solution=u, grid=grid)


def _run_one(args) -> RunRecord:
    problem_spec, grid_spec, method_spec, noise_spec, seed = args
    try:
        return _execute_run(problem_spec, grid_spec, method_spec, noise_spec, seed)
    except Exception as exc:  # failure isolation: record, do not abort the batch
        return RunRecord(method_spec.get("method", "?"),
                         _param_summary(method_spec) + f";error={type(exc).__name__}",
                         float("nan"), float("nan"), float("nan"), 0, 0.0, False)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list:
    """All (method, noise) runs in config order; deterministic given the seed."""
    tasks = [(config.problem, config.grid, m, nz, config.seed)
             for m in config.methods for nz in config.noise]
    if jobs <= 1:
        return [_run_one(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))


def _fmt(x: float) -> str:
    if isinstance(x, float) and np.isnan(x):
        return "nan"
    return repr(float(x))


def emit_csv(records, path) -> None:
    """Write records.  One row per record, LF line endings, C locale floats.
    wall_ms is emitted as 0 (reproducibility); see RunRecord.wall_time."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([
            r.method,
            r.param_summary,
            _fmt(r.delta),
            _fmt(r.rel_solution_error),
            _fmt(r.residual),
            str(int(r.iterations)),
            "0",
            "true" if r.converged else "false",
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path) -> list:
    """String-level inverse of emit_csv (header skipped)."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split(",") for line in fh]
    if rows and rows[0] == CSV_HEADER.split(","):
        rows = rows[1:]
    return [r for r in rows if r != [""]]


def emit_profile(samples, grid: Grid, path) -> None:
    """Two-column x,value CSV of a solution profile."""
    samples = np.asarray(samples, dtype=float)
    lines = ["x,value"]
    if samples.size:
        if samples.shape[0] != grid.n:
            raise ValueError("samples do not match the grid")
        for x, v in zip(grid.nodes, samples):
            lines.append(f"{float(x)!r},{float(v)!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
