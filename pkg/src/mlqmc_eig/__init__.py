"""Multilevel quasi-Monte Carlo for random elliptic eigenproblems."""

__version__ = "0.1.0"

from .coeff import (CoefficientExpansion, ParamPoint, constant_expansion,
                    eval_truncated, make_builtin_family)
from .eigsolve import (EigenPair, GapReport, laplacian_chi1, sandwich_check,
                       second_eigenvalue, smallest_eigenpair)
from .fem import AssembledPair, MeshLevel, assemble, build_hierarchy
from .lattice import (LatticeRule, PODWeights, ShiftedEstimate, cbc_construct,
                      compute_pod_weights, generate_points, shifted_qmc,
                      worst_case_error_sq)
from .mlqmc import (Functional, Hierarchy, LevelSpec, MLEstimate, adapt,
                    fit_rates, fixed_schedule, geometric_schedule,
                    level_difference, ml_estimate, ml_estimate_all)
from .oracle import (TensorQuadrature, dense_reference_eigenpairs,
                     discrete_laplacian_eigenvalue, expect_tensor)

__all__ = [
    "CoefficientExpansion", "ParamPoint", "constant_expansion",
    "eval_truncated", "make_builtin_family",
    "EigenPair", "GapReport", "laplacian_chi1", "sandwich_check",
    "second_eigenvalue", "smallest_eigenpair",
    "AssembledPair", "MeshLevel", "assemble", "build_hierarchy",
    "LatticeRule", "PODWeights", "ShiftedEstimate", "cbc_construct",
    "compute_pod_weights", "generate_points", "shifted_qmc",
    "worst_case_error_sq",
    "Functional", "Hierarchy", "LevelSpec", "MLEstimate", "adapt",
    "fit_rates", "fixed_schedule", "geometric_schedule", "level_difference",
    "ml_estimate", "ml_estimate_all",
    "TensorQuadrature", "dense_reference_eigenpairs",
    "discrete_laplacian_eigenvalue", "expect_tensor",
]
