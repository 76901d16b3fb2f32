import numpy as np
import pytest

from fredsolve.firstkind import (FirstKindProblem, NoiseSpec, eigen_test_problem,
                                 inject_noise, picard_condition, picard_solve,
                                 residual_norm, symmetrize, volterra_differentiate)
from fredsolve.grids import build_grid, discretize_kernel, l2_norm
from fredsolve.kernels import SpectralBasis, canonical_spectrum


@pytest.mark.parametrize("m", [1, 2, 3])
def test_picard_recovers_eigen_solution(m):
    basis = canonical_spectrum("triangular", n_modes=10)
    p = eigen_test_problem(m)
    g = build_grid(0, 1, "simpson", 129)
    psi = picard_solve(basis, p.f, 10)
    assert np.abs(psi(g.nodes) - np.sin(m * np.pi * g.nodes)).max() < 1e-10


def test_picard_zero_rhs():
    basis = canonical_spectrum("triangular", n_modes=5)
    psi = picard_solve(basis, lambda x: np.zeros_like(x), 5)
    assert np.allclose(psi(np.linspace(0, 1, 11)), 0.0)


def test_picard_linearity():
    basis = canonical_spectrum("triangular", n_modes=6)
    a, b = 2.0, -0.7

    def f(x):
        return a * np.sin(np.pi * x) / np.pi**2 + b * np.sin(3 * np.pi * x) / (3 * np.pi) ** 2

    x = np.linspace(0, 1, 33)
    psi = picard_solve(basis, f, 6)
    assert np.allclose(psi(x), a * np.sin(np.pi * x) + b * np.sin(3 * np.pi * x), atol=1e-11)


def test_picard_condition_single_mode_bounded():
    basis = canonical_spectrum("triangular", n_modes=12)
    diag = picard_condition(basis, lambda x: np.sin(np.pi * x) / np.pi**2, 12)
    # all growth happens at the first mode; the partial sums are then flat
    assert np.allclose(diag.partial_sums[1:], diag.partial_sums[0], atol=1e-12)
    assert diag.growth_ratio() < 1.0 + 1e-9


def test_picard_condition_divergent_case():
    basis = canonical_spectrum("triangular", n_modes=30)

    def f(x):
        # coefficients alpha_n = lam_n^{-1/2}, so alpha_n^2 lam_n^2 = lam_n grows
        out = np.zeros_like(np.asarray(x, dtype=float))
        for k in range(30):
            lam = basis.char_numbers[k]
            out += lam**-0.5 * basis.evaluate(k, x)
        return out

    diag = picard_condition(basis, f, 30)
    assert diag.growth_ratio() > 1.1
    assert diag.partial_sums[-1] > 10 * diag.partial_sums[4]


def test_picard_condition_zero():
    basis = canonical_spectrum("triangular", n_modes=5)
    diag = picard_condition(basis, lambda x: np.zeros_like(x), 5)
    assert np.allclose(diag.partial_sums, 0.0)


def test_symmetrize_symmetric_psd():
    p = eigen_test_problem(1)
    g = build_grid(0, 1, "simpson", 65)
    ps = symmetrize(p, g)
    op = discretize_kernel(ps.kernel, g)
    K = op.kernel_values
    assert np.abs(K - K.T).max() < 1e-12
    s = np.sqrt(g.weights)
    sym = K * np.outer(s, s)
    assert np.linalg.eigvalsh(0.5 * (sym + sym.T)).min() > -1e-10


def test_symmetrize_squares_spectrum():
    p = eigen_test_problem(1)
    g = build_grid(0, 1, "simpson", 129)
    ps = symmetrize(p, g)
    op = discretize_kernel(ps.kernel, g)
    phi = np.sqrt(2) * np.sin(np.pi * g.nodes)
    out = op.apply(phi)
    assert np.allclose(out, phi / np.pi**4, atol=5e-6)


def test_symmetrize_single_mode_rhs():
    p = eigen_test_problem(1)  # f = e_1 / (sqrt(2) lam_1) in the normalized basis
    g = build_grid(0, 1, "simpson", 129)
    ps = symmetrize(p, g)
    # f' = A* f = e_1-direction scaled by 1/lam_1^2
    want = np.sin(np.pi * g.nodes) / np.pi**4
    assert np.allclose(ps.f(g.nodes), want, atol=3e-6)


def test_residual_norm_cases():
    p = eigen_test_problem(1)
    g = build_grid(0, 1, "simpson", 129)
    psi_exact = np.sin(np.pi * g.nodes)
    fnorm = l2_norm(g, p.f_samples(g))
    assert residual_norm(p, psi_exact, g) < 2e-5  # kink-limited quadrature
    assert np.isclose(residual_norm(p, np.zeros(g.n), g), fnorm)
    assert np.isclose(residual_norm(p, 2 * psi_exact, g), fnorm, atol=3e-5)


def test_residual_norm_grid_refinement_stable():
    p = eigen_test_problem(2)
    vals = []
    for n in (65, 129, 257):
        g = build_grid(0, 1, "simpson", n)
        vals.append(residual_norm(p, 0.5 * np.sin(2 * np.pi * g.nodes), g))
    assert np.allclose(vals, vals[0], rtol=3e-3)


def test_inject_noise_contract():
    g = build_grid(0, 1, "simpson", 129)
    f = np.sin(np.pi * g.nodes)
    assert np.array_equal(inject_noise(f, NoiseSpec(0.0, seed=1), g), f)
    spec = NoiseSpec(0.01, seed=3, kind="white_fourier", modes=5)
    noisy = inject_noise(f, spec, g)
    assert abs(l2_norm(g, noisy - f) - 0.01) < 1e-10
    assert np.array_equal(noisy, inject_noise(f, spec, g))  # determinism
    single = inject_noise(f, NoiseSpec(0.02, seed=9, kind="single_mode", modes=2), g)
    e = single - f
    # single-mode perturbation is proportional to sin(2 pi x)
    proj = e - (e @ (g.weights * np.sqrt(2) * np.sin(2 * np.pi * g.nodes))) * np.sqrt(2) * np.sin(2 * np.pi * g.nodes)
    assert l2_norm(g, proj) < 1e-12


def test_inject_noise_errors():
    g = build_grid(0, 1, "trapezoid", 5)
    with pytest.raises(ValueError):
        NoiseSpec(-1.0)
    with pytest.raises(ValueError):
        inject_noise(np.zeros(0), NoiseSpec(0.1), g)


def test_volterra_differentiate_pure_integration():
    g = build_grid(0, 1, "simpson", 65)
    prob = volterra_differentiate(lambda x, xi: 1.0, lambda x: 2 * x, g)
    psi = prob.solve()
    assert np.allclose(psi, 2 * g.nodes, atol=1e-10)


def test_volterra_differentiate_manufactured():
    # k(x, xi) = 1 + x - xi with psi* = 1:  f(x) = x + x^2/2, f' = 1 + x
    g = build_grid(0, 1, "simpson", 257)
    prob = volterra_differentiate(lambda x, xi: 1.0 + x - xi, lambda x: 1.0 + x, g)
    psi = prob.solve()
    assert np.abs(psi - 1.0).max() < 1e-6


def test_volterra_differentiate_zero_diagonal():
    g = build_grid(0, 1, "simpson", 17)
    with pytest.raises(ValueError):
        volterra_differentiate(lambda x, xi: x - xi, lambda x: np.ones_like(x), g)
