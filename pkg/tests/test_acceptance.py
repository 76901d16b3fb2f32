"""Acceptance suite: one test per criterion, each printing a PASS line.

Pinned tolerances and parameters:

 1. spectral solve reproduces sin(m pi x), m = 1..3, max node error 1e-10, n=129
 2. shift-regularization coefficient 1/(1 + alpha pi^2), rel. 1e-3, n=257
 3. one-step residual-correction annihilation at step pi^2 (1e-6) + step guard
 4. resolvent identity residual <= 1e-8 (r=0.5, lam=0.3, 60 terms, 65-node
    grid on [-1,1], i.e. 64 panels ~ 64^2 sample pairs); periodic-basis Gram
    defect <= 1e-10; Mercer reconstruction of the triangular kernel <= 2e-3
 5. transform internal consistency at r=0.5, mu=0.3, N=60, n=129:
    (a) discrete system residual <= 1e-8, (b) recovery mode factors
    (1 - mu r^n)/(1 - 2 mu r^n) to 1e-8 for n <= 10, (c) block vs stacked
    solve bitwise, (d) direct vs simple iteration <= 1e-7 where the measured
    contraction bound |mu| M < 1 holds (mu = 0.1; at mu = 0.3 the measured
    M ~ 4.0 makes the premise false)
 6. transform end to end on the benchmark problem in its accuracy mode
    (mu = 13000, the paper-level defaults mu = 0.3 regularize too heavily to
    approach the data; see notes in the transform module): exact-data
    residual <= 1e-2 ||f||, noisy-data (delta = 0.01 ||f||) residual
    <= 3e-2 ||f|| with a clean convergence flag
 7. two-point BVP reduction: manufactured cos(pi x / 2) to 1e-6 at n=257,
    route agreement 1e-8, structural boundary conditions 1e-10
 8. membrane pipeline: u(1/2,1/2) = 0.0736713 +- 1e-3 from the oracle-psi
    reconstruction; closure estimate <= 5e-2 at 33x33, decreasing at 65x65
 9. heat reduction: separation-of-variables oracle residual <= 1e-3 at 65x65
10. discrepancy-stopped classical iterations under 1% noise: residual
    <= 2 c1 delta with c1 = 1 for all five schemes; steepest-descent
    residual history monotone
11. identical CSV bytes across repeated runs and across --jobs 1 vs 4
"""

import filecmp

import numpy as np
import pytest

import helpers
from fredsolve.bench import emit_csv, load_config, run_experiment
from fredsolve.classical import (IterationParams, RegularizationParams, StepOutOfRangeError,
                                 StoppingRule, averaged_iterate, fridman_iterate,
                                 implicit_iterate, landweber_iterate, lavrentiev_solve,
                                 steepest_descent_iterate)
from fredsolve.firstkind import (FirstKindProblem, NoiseSpec, eigen_test_problem,
                                 inject_noise, picard_solve, residual_norm)
from fredsolve.grids import build_grid, l2_norm
from fredsolve.kernels import (ResolventSpec, canonical_spectrum, mercer_reconstruct,
                               resolvent_identity_residual, triangular_kernel)
from fredsolve.secondkind import norm_M, nystrom_solve, simple_iteration
from fredsolve.transform import TransformConfig, build_kernels, recover_psi, solve_transform

LAM1 = np.pi**2


def test_criterion_1_eigen_reproduction():
    basis = canonical_spectrum("triangular", n_modes=10)
    g = build_grid(0, 1, "simpson", 129)
    worst = 0.0
    for m in (1, 2, 3):
        p = eigen_test_problem(m)
        psi = picard_solve(basis, p.f, 10)(g.nodes)
        worst = max(worst, np.abs(psi - np.sin(m * np.pi * g.nodes)).max())
    assert worst <= 1e-10
    print(f"criterion 1: PASS (max node error {worst:.2e} <= 1e-10)")


def test_criterion_2_lavrentiev_closed_form():
    g = build_grid(0, 1, "simpson", 257)
    p = eigen_test_problem(1)
    e = np.sqrt(2) * np.sin(np.pi * g.nodes)
    worst = 0.0
    for alpha in (1e-2, 1e-3, 1e-4):
        res = lavrentiev_solve(p, g, RegularizationParams(alpha))
        # projection onto the orthonormal mode, then back to the sin amplitude
        coef = float(res.solution @ (g.weights * e)) * np.sqrt(2)
        want = 1.0 / (1.0 + alpha * np.pi**2)
        worst = max(worst, abs(coef - want) / want)
    assert worst <= 1e-3
    print(f"criterion 2: PASS (worst relative coefficient error {worst:.2e} <= 1e-3)")


def test_criterion_3_one_step_annihilation():
    g = build_grid(0, 1, "simpson", 257)
    p = eigen_test_problem(1)
    params = IterationParams("fridman", step=LAM1, max_iters=1, lambda1=LAM1)
    res = fridman_iterate(p, g, params, np.zeros(g.n))
    exact = np.sin(np.pi * g.nodes)
    rel = l2_norm(g, res.solution - exact) / l2_norm(g, exact)
    assert rel <= 1e-6
    with pytest.raises(StepOutOfRangeError):
        fridman_iterate(p, g, IterationParams("fridman", step=3 * LAM1, max_iters=1,
                                              lambda1=LAM1), np.zeros(g.n))
    print(f"criterion 3: PASS (one-step error {rel:.2e} <= 1e-6; 3*lam1 step rejected)")


def test_criterion_4_resolvent_machinery():
    spec = ResolventSpec(0.5, 0.3, 60)
    g = build_grid(-1, 1, "trapezoid", 65)
    identity_res = resolvent_identity_residual(spec, g)
    assert identity_res <= 1e-8

    # Gram defect of the periodic half-interval family (inner products are
    # delta_{nm} / 2 on a unit interval)
    gq = build_grid(0, 1, "simpson", 1025)
    funcs = [np.ones(gq.n) / np.sqrt(2)]
    for n in range(1, 11):
        funcs.append(np.cos(2 * n * np.pi * gq.nodes))
        funcs.append(np.sin(2 * n * np.pi * gq.nodes))
    F = np.array(funcs)
    gram = (F * gq.weights) @ F.T
    gram_defect = np.abs(gram - 0.5 * np.eye(len(funcs))).max()
    assert gram_defect <= 1e-10

    basis = canonical_spectrum("triangular", n_modes=200)
    x = np.linspace(0, 1, 33)
    mercer_err = np.abs(mercer_reconstruct(basis, 200, x[:, None], x[None, :])
                        - triangular_kernel(x[:, None], x[None, :])).max()
    assert mercer_err <= 2e-3
    print(f"criterion 4: PASS (identity {identity_res:.2e} <= 1e-8, "
          f"gram {gram_defect:.2e} <= 1e-10, mercer {mercer_err:.2e} <= 2e-3)")


def test_criterion_5_transform_internal_consistency():
    p = eigen_test_problem(1)
    g = build_grid(0, 1, "simpson", 129)

    # (a) discrete residual of the direct solve at the defaults
    cfg = TransformConfig(r=0.5, mu=0.3, n_resolvent_terms=60, grid=g)
    res = solve_transform(p, cfg)
    assert res.system_residual <= 1e-8

    # (b) recovery mode factors
    worst_b = 0.0
    for n in range(11):
        e = np.cos(2 * n * np.pi * g.nodes) if n else np.ones(g.n)
        factor = (1 - cfg.mu * 0.5**n) / (1 - 2 * cfg.mu * 0.5**n)
        worst_b = max(worst_b, np.abs(recover_psi(e, cfg) - factor * e).max())
    assert worst_b <= 1e-8

    # (c) block vs stacked bitwise
    import scipy.linalg

    from fredsolve.secondkind import assemble_dense

    system = build_kernels(p, cfg)
    problem = system.as_second_kind(cfg.mu)
    chi_block = np.concatenate(nystrom_solve(problem))
    A, F, _ = assemble_dense(problem)
    stacked = np.eye(2 * g.n) - cfg.mu * np.block(
        [[system.K11, system.K12], [system.K21, system.K22]]
    ) * np.concatenate([g.weights, g.weights])
    assert np.array_equal(A, stacked)
    chi_stacked = scipy.linalg.solve(stacked, F)
    assert np.array_equal(chi_block, chi_stacked)

    # (d) direct vs simple iteration where the contraction premise holds
    cfg_c = TransformConfig(r=0.5, mu=0.1, n_resolvent_terms=60, grid=g)
    prob_c = build_kernels(p, cfg_c).as_second_kind(cfg_c.mu)
    report = norm_M(prob_c)
    assert report.contractive
    direct = np.concatenate(nystrom_solve(prob_c))
    iterated, _ = simple_iteration(prob_c, tol=1e-13, max_iters=20000)
    diff = np.abs(direct - np.concatenate(iterated)).max()
    assert diff <= 1e-7
    print(f"criterion 5: PASS (system residual {res.system_residual:.2e}, "
          f"mode factors {worst_b:.2e}, stacked solve bitwise, "
          f"direct-vs-iterate {diff:.2e} at mu=0.1 where mu*M={report.mu_times_M:.2f})")


def test_criterion_6_transform_end_to_end():
    p = eigen_test_problem(1)
    g = build_grid(0, 1, "simpson", 129)
    cfg = TransformConfig(r=0.5, mu=13000.0, n_resolvent_terms=60, grid=g)
    fv = p.f_samples(g)
    fnorm = l2_norm(g, fv)

    res = solve_transform(p, cfg)
    rel = res.residual / fnorm
    assert rel <= 1e-2
    exact = np.sin(np.pi * g.nodes)
    rel_sol = l2_norm(g, res.psi1 - exact) / l2_norm(g, exact)

    noisy_f = inject_noise(fv, NoiseSpec(0.01 * fnorm, seed=42, modes=4), g)
    noisy = FirstKindProblem(p.kernel, lambda x: np.interp(x, g.nodes, noisy_f),
                             p.domain, p.exact_solution)
    res_n = solve_transform(noisy, cfg)
    rel_n = res_n.residual / fnorm
    assert rel_n <= 3e-2
    assert res_n.system_residual <= 1e-8  # solve stayed stable, no divergence
    print(f"criterion 6: PASS (exact residual {rel:.2e} <= 1e-2, noisy {rel_n:.2e} "
          f"<= 3e-2; recorded rel_solution_error = {rel_sol:.3f} at mu=13000)")


def test_criterion_7_ode_bvp():
    from fredsolve.reductions import OdeBvp, ode_bvp_reduce

    g = build_grid(0, 1, "simpson", 257)
    p = OdeBvp(a=lambda x: np.ones_like(x),
               f=lambda x: -(np.pi**2 / 4 + 1) * np.cos(np.pi * x / 2))
    red = ode_bvp_reduce(p, g)
    psi2, u2 = red.solve()
    psi1, u1 = red.solve_volterra()
    u_true = np.cos(np.pi * g.nodes / 2)
    rel = np.abs(u2 - u_true).max() / np.abs(u_true).max()
    route_gap = max(np.abs(u1 - u2).max(), np.abs(psi1 - psi2).max())
    assert rel <= 1e-6
    assert route_gap <= 1e-8
    rng = np.random.default_rng(3)
    u_rand = red.reconstruct(rng.standard_normal(g.n))
    assert abs(u_rand[-1]) <= 1e-10  # u(1) = 0 structurally
    print(f"criterion 7: PASS (rel error {rel:.2e} <= 1e-6, routes {route_gap:.2e} "
          f"<= 1e-8, u(1) = {u_rand[-1]:.1e})")


def test_criterion_8_membrane_pipeline():
    from fredsolve.reductions import boundary_symmetrize, poisson2d_reduce

    red = poisson2d_reduce()
    deltas = {}
    center = None
    for n in (33, 65):
        g = build_grid(0, 1, "simpson", n)
        X, Y = np.meshgrid(g.nodes, g.nodes, indexing="ij")
        psi = helpers.membrane_psi(X, Y)
        u1 = red.reconstructors["from_x"](psi, g, g)
        u2 = red.reconstructors["from_y"](psi, g, g)
        _, _, est = boundary_symmetrize(u1, u2, g, g)
        deltas[n] = est.delta
        if n == 33:
            center = u1[g.n // 2, g.n // 2]
    assert abs(center - 0.0736713) <= 1e-3
    assert deltas[33] <= 5e-2
    assert deltas[65] < deltas[33]
    print(f"criterion 8: PASS (u(1/2,1/2) = {center:.7f}, delta33 = {deltas[33]:.2e} "
          f"<= 5e-2, delta65 = {deltas[65]:.2e} decreasing)")


def test_criterion_9_heat_reduction():
    from fredsolve.reductions import heat_reduce

    red = heat_reduce(lambda x: np.sin(np.pi * x))
    g = build_grid(0, 1, "simpson", 65)
    X, T = np.meshgrid(g.nodes, g.nodes, indexing="ij")
    psi = -np.pi**2 * np.exp(-np.pi**2 * T) * np.sin(np.pi * X)
    res = red.residual(psi, g, g, norm="max")
    assert res <= 1e-3
    print(f"criterion 9: PASS (oracle equation residual {res:.2e} <= 1e-3)")


def test_criterion_10_discrepancy_stopped_suite():
    g = build_grid(0, 1, "simpson", 257)
    p = eigen_test_problem(1)
    fv = p.f_samples(g)
    fnorm = l2_norm(g, fv)
    delta = 0.01 * fnorm
    noisy_f = inject_noise(fv, NoiseSpec(delta, seed=42, modes=3), g)
    noisy = FirstKindProblem(p.kernel, lambda x: np.interp(x, g.nodes, noisy_f))
    stop = StoppingRule(c1=1.0, delta=delta)

    runs = {
        "fridman": (fridman_iterate,
                    IterationParams("fridman", step=LAM1, max_iters=2000, stop=stop,
                                    lambda1=LAM1), np.zeros(g.n)),
        "landweber": (landweber_iterate,
                      IterationParams("landweber", step=np.pi**4, max_iters=4000,
                                      stop=stop), np.zeros(g.n)),
        "averaged": (averaged_iterate,
                     IterationParams("averaged", max_iters=4000, stop=stop,
                                     lambda1=LAM1), LAM1 * noisy_f),
        "implicit": (implicit_iterate,
                     IterationParams("implicit", step=0.5, max_iters=4000, stop=stop),
                     np.zeros(g.n)),
        "steepest_descent": (steepest_descent_iterate,
                             IterationParams("steepest_descent", max_iters=4000,
                                             stop=stop), np.zeros(g.n)),
    }
    report = []
    for name, (fn, params, start) in runs.items():
        res = fn(noisy, g, params, start)
        final = residual_norm(noisy, res.solution, g)
        assert res.converged, name
        assert final <= 2 * delta, (name, final, 2 * delta)
        report.append(f"{name}={final / delta:.2f}d")
        if name == "steepest_descent":
            hist = np.array(res.residual_history)
            assert np.all(np.diff(hist) <= 1e-12)
    print("criterion 10: PASS (residual/delta: " + ", ".join(report) + " all <= 2)")


def test_criterion_11_determinism(tmp_path):
    doc = {
        "problem": {"kind": "eigen_test", "m": 1},
        "grid": {"rule": "simpson", "n": 65},
        "methods": [
            {"method": "lavrentiev", "alpha": 1e-3},
            {"method": "steepest_descent", "max_iters": 200},
        ],
        "noise": [{"delta_rel": 0.01, "seed": 3, "modes": 3}],
        "seed": 42,
    }
    cfg = load_config(doc)
    paths = [tmp_path / name for name in ("a.csv", "b.csv", "c.csv")]
    emit_csv(run_experiment(cfg, jobs=1), paths[0])
    emit_csv(run_experiment(cfg, jobs=1), paths[1])
    emit_csv(run_experiment(cfg, jobs=4), paths[2])
    assert filecmp.cmp(paths[0], paths[1], shallow=False)
    assert filecmp.cmp(paths[0], paths[2], shallow=False)
    print("criterion 11: PASS (byte-identical CSV across runs and job counts)")
