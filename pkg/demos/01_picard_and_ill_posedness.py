"""Spectral (Picard-series) solution of a first-kind equation, and why the
problem is ill-posed.

The benchmark problem uses the triangular kernel on the unit square, whose
eigenfunctions are sin(n pi x) with characteristic numbers (n pi)^2, and the
right-hand side f = sin(m pi x) / (m pi)^2, so the exact solution is
sin(m pi x).  Any data error at mode m is amplified by (m pi)^2.
"""

import numpy as np

from fredsolve import (NoiseSpec, build_grid, canonical_spectrum, eigen_test_problem,
                       inject_noise, l2_norm, picard_condition, picard_solve)

grid = build_grid(0, 1, "simpson", 129)
basis = canonical_spectrum("triangular", n_modes=20)

print("exact-data spectral solves")
for m in (1, 2, 3):
    p = eigen_test_problem(m)
    psi = picard_solve(basis, p.f, 10)(grid.nodes)
    err = np.abs(psi - np.sin(m * np.pi * grid.nodes)).max()
    print(f"  m={m}: max node error {err:.2e}")

print("\nsummability diagnostic (bounded partial sums <=> safe spectral solve)")
p = eigen_test_problem(1)
diag = picard_condition(basis, p.f, 20)
print(f"  clean data: growth ratio over the last decade {diag.growth_ratio():.4f}")

fv = p.f_samples(grid)
noisy = inject_noise(fv, NoiseSpec(0.01 * l2_norm(grid, fv), seed=0, modes=8), grid)
diag_noisy = picard_condition(basis, lambda x: np.interp(x, grid.nodes, noisy), 20)
print(f"  1% noisy data: growth ratio {diag_noisy.growth_ratio():.4f}")

print("\nnoise amplification mode by mode (factor (m pi)^2)")
for m in (2, 5, 8):
    e = np.sqrt(2) * np.sin(m * np.pi * grid.nodes)
    psi_pert = picard_solve(basis, lambda x, m=m: 1e-4 * np.sqrt(2) * np.sin(m * np.pi * x), 20)
    amp = l2_norm(grid, psi_pert(grid.nodes)) / 1e-4
    print(f"  mode {m}: data error amplified {amp:9.1f}x  ((m pi)^2 = {(m*np.pi)**2:9.1f})")
