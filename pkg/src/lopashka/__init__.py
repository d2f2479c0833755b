"""Symbol analysis, half-space solvers and estimate verification.

The package covers the pipeline from matrix-valued interior and
boundary symbols through solvability analysis (parameter-ellipticity
scans, boundary-row sweeps), explicit spectral solvers on the
half-space (resolvent problems and time stepping), and numerical
verification batteries for kernel decay, randomized boundedness and
space-time regularity ratios.  The command line lives in
:mod:`lopashka.cli`; problem files and fixtures in :mod:`lopashka.io`
and :mod:`lopashka.fixtures`.
"""

from .errors import (LopashkaError, ArgumentError, AssumptionError,
                     ConsistencyError)
from .symbols import (TAU_PROJ, multi_indices, InteriorSymbol,
                      TangentialPolynomial, BoundaryComponent, BoundaryRow,
                      BoundaryOperatorSpec, projection_rank, range_basis)
from .ellipticity import (TAU_ARG, EllipticityReport, sphere_points,
                          ellipticity_angle, check_complex_perturbation)
from .companion import (TAU_SPLIT, GAP_MIN, scale_variables, CompanionSystem,
                        SpectralSplit, build_companion, spectral_split,
                        scaled_boundary_row, propagator, triangular_exp)
from .lopatinskii import (KAPPA_MAX, SolutionMap, LSVerdict,
                          build_solution_map, sweep_points, ls_sweep,
                          OdeSolution, ode_oracle)
from .kernels import (p_kernel, p_kernel_batch,
                      lemma_integral_identity_check, KernelGrid, KernelField,
                      DecayFit, compute_kernel_field, verify_kernel_decay,
                      decay_stability)
from .grids import fd_weights, derivative_matrix, quadrature_weights, Grid
from .halfspace import (TOL_BC, TOL_PDE, LEAK_MAX, FullSpaceSection,
                        HalfSpaceProblem, SolutionField, solve_fullspace,
                        extension_operator, solve_halfspace,
                        resolvent_estimate_harness)
from .rbounds import (OperatorFamily, RBoundEstimate, operator_pnorm,
                      estimate_rbound, neumann_rbound_check,
                      sector_derivative_check, mikhlin_symbol_check,
                      mikhlin_resolvent_suite, combinatorial_inequality_test)
from .parabolic import (TOL_COMPAT, kappa_exponent, slobodetskii_seminorm,
                        fractional_space_norms, ParabolicProblem,
                        DataClassReport, SolutionHistory, validate_data,
                        solve_parabolic, mr_ratio_harness)
from .io import (problem_to_dict, problem_from_dict, load_problem,
                 save_problem, write_field, read_field)
from .fixtures import (FIXTURE_NAMES, fixture_description, load_fixture,
                       fixture_document, catalysis_problem,
                       mixed_rows_problem)
from .reports import config_hash, RunReport, write_csv

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "LopashkaError", "ArgumentError", "AssumptionError", "ConsistencyError",
    # symbols
    "TAU_PROJ", "multi_indices", "InteriorSymbol", "TangentialPolynomial",
    "BoundaryComponent", "BoundaryRow", "BoundaryOperatorSpec",
    "projection_rank", "range_basis",
    # ellipticity
    "TAU_ARG", "EllipticityReport", "sphere_points", "ellipticity_angle",
    "check_complex_perturbation",
    # companion systems
    "TAU_SPLIT", "GAP_MIN", "scale_variables", "CompanionSystem",
    "SpectralSplit", "build_companion", "spectral_split",
    "scaled_boundary_row", "propagator", "triangular_exp",
    # boundary solvability
    "KAPPA_MAX", "SolutionMap", "LSVerdict", "build_solution_map",
    "sweep_points", "ls_sweep", "OdeSolution", "ode_oracle",
    # kernels
    "p_kernel", "p_kernel_batch", "lemma_integral_identity_check",
    "KernelGrid", "KernelField", "DecayFit", "compute_kernel_field",
    "verify_kernel_decay", "decay_stability",
    # grids
    "fd_weights", "derivative_matrix", "quadrature_weights", "Grid",
    # half-space solver
    "TOL_BC", "TOL_PDE", "LEAK_MAX", "FullSpaceSection", "HalfSpaceProblem",
    "SolutionField", "solve_fullspace", "extension_operator",
    "solve_halfspace", "resolvent_estimate_harness",
    # randomized boundedness
    "OperatorFamily", "RBoundEstimate", "operator_pnorm", "estimate_rbound",
    "neumann_rbound_check", "sector_derivative_check",
    "mikhlin_symbol_check", "mikhlin_resolvent_suite",
    "combinatorial_inequality_test",
    # parabolic
    "TOL_COMPAT", "kappa_exponent", "slobodetskii_seminorm",
    "fractional_space_norms", "ParabolicProblem", "DataClassReport",
    "SolutionHistory", "validate_data", "solve_parabolic",
    "mr_ratio_harness",
    # problem files and field dumps
    "problem_to_dict", "problem_from_dict", "load_problem", "save_problem",
    "write_field", "read_field",
    # fixtures
    "FIXTURE_NAMES", "fixture_description", "load_fixture",
    "fixture_document", "catalysis_problem", "mixed_rows_problem",
    # reports
    "config_hash", "RunReport", "write_csv",
]
