"""Weighted regularization via fictitious null spaces.

Severely ill-posed linear problems have many singular values that drown in
the data noise.  The span of the corresponding right singular vectors acts
as a null space in practice ("fictitious null space"): components living
there are invisible from data.  This package builds the truncated-SVD
machinery, the thresholded weighting operator derived from the fictitious
null space, weighted sparsity / Tikhonov solvers with discrepancy-based
parameter choice, numeric certificates for the underlying recovery theory,
and two analytic PDE experiment suites (inverse heat conduction, Cauchy
problem for Laplace's equation on an annulus).
"""

from ficnull.linop import (
    SingularSystem,
    TruncatedOperator,
    apply_truncated,
    apply_truncated_pinv,
    compute_singular_system,
    projection_apply,
)
from ficnull.weighting import (
    TruncationReport,
    WeightingScheme,
    compute_weights,
    select_truncation,
    weight_apply,
)
from ficnull.solvers import (
    Formulation,
    InverseProblem,
    Reconstruction,
    SolveSpec,
    morozov_alpha,
    solve_basis_pursuit,
    solve_l1,
    solve_tikhonov,
)

__all__ = [
    "SingularSystem",
    "TruncatedOperator",
    "apply_truncated",
    "apply_truncated_pinv",
    "compute_singular_system",
    "projection_apply",
    "TruncationReport",
    "WeightingScheme",
    "compute_weights",
    "select_truncation",
    "weight_apply",
    "Formulation",
    "InverseProblem",
    "Reconstruction",
    "SolveSpec",
    "morozov_alpha",
    "solve_basis_pursuit",
    "solve_l1",
    "solve_tikhonov",
]

__version__ = "0.1.0"
