"""Solvers for Fredholm integral equations of the first kind.

The package bundles
  - quadrature grids and Nystrom discretization (`grids`),
  - the Poisson kernel, its resolvent series, and canonical spectra (`kernels`),
  - the first-kind problem container with Picard-series machinery (`firstkind`),
  - classical regularization and iteration baselines (`classical`),
  - generic second-kind block solvers (`secondkind`),
  - the Poisson-kernel correctness transform to second-kind form (`transform`),
  - boundary-value-problem reducers (`reductions`),
  - a config-driven benchmark harness and CLI (`bench`, `cli`).
"""

from .grids import (Grid, QuadRule, DiscreteOperator, build_grid, integrate,
                    discretize_kernel, volterra_weights, l2_norm)
from .kernels import (PoissonKernelSpec, ResolventSpec, SpectralBasis, poisson_h,
                      resolvent_H, resolvent_dH_dlambda, resolvent_identity_residual,
                      triangular_kernel, canonical_spectrum, mercer_reconstruct)
from .firstkind import (FirstKindProblem, PicardDiagnostic, NoiseSpec,
                        eigen_test_problem, fourier_coefficients, picard_solve,
                        picard_condition, symmetrize, residual_norm, inject_noise,
                        volterra_differentiate, VolterraSecondKind)
from .classical import (RegularizationParams, IterationParams, StoppingRule,
                        MethodResult, ModeDiagnostic, StepOutOfRangeError,
                        lavrentiev_solve, quasisolution_solve, fridman_iterate,
                        landweber_iterate, averaged_iterate, implicit_iterate,
                        steepest_descent_iterate, mode_diagnostic, perlin_deflate)
from .secondkind import (SecondKindProblem, ContractionReport, SingularSystemError,
                         IterationDivergenceError, norm_M, nystrom_solve,
                         discrete_residual, simple_iteration, neumann_resolvent,
                         solve_via_resolvent)
from .transform import (TransformConfig, AssembledSystem, TransformResult,
                        default_config, check_mu_admissible, build_kernels,
                        solve_transform, recover_psi, compose_resolvent_kernel,
                        solve_single_equation, error_correction_terms,
                        near_homogeneity_residual, solve_transform_2d)
from .reductions import (SeparatedBC, OdeBvp, OdeReduction, ReducedFirstKind2D,
                         ClosureEstimate, ode_bvp_reduce, poisson2d_reduce,
                         boundary_symmetrize, heat_reduce, convection_diffusion_reduce,
                         tricomi_reduce)
from .bench import (ExperimentConfig, RunRecord, load_config, run_experiment,
                    emit_csv, emit_profile)

__version__ = "0.1.0"
