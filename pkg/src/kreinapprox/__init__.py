"""Indefinite least squares, splines and smoothing in finite-dimensional Krein spaces."""

from .errors import (
    DimensionMismatch,
    InvalidFundamentalSymmetry,
    InvalidState,
    KreinError,
    NoSolution,
    NotHermitian,
    NotInvolution,
    NotSelfadjoint,
    NotWeaklyComplementable,
    ParseError,
    PathMismatch,
    RangeHypothesisFailed,
    ValidationError,
)
from .ilsq import (
    IlsqInstance,
    analyze_w_inverse,
    check_regularity_consequence,
    operator_ilsq_min,
    solve_ilss_point,
)
from .krein import (
    DEFAULT_TOL,
    KreinMap,
    SignatureSpace,
    Subspace,
    Tolerance,
    indefinite_adjoint,
    is_fundamental_symmetry,
    is_krein_positive,
    is_krein_selfadjoint,
    is_regular_subspace,
    is_w_nonnegative_subspace,
    j_trace,
    random_fundamental_symmetry,
    validate_signature,
)
from .oracle import QuadraticForm, fd_gradient, quadratic_min, sample_minimality
from .schur import (
    is_complementable,
    is_weakly_complementable,
    krein_schur_complement,
)
from .smoothing import (
    AugmentedSpace,
    BlockWeight,
    SmoothingInstance,
    build_augmented,
    frechet_derivative,
    operator_smoothing_min,
    optimal_inverse,
    smoothing_feasible,
    smoothing_global_solution,
    solve_smoothing_point,
)
from .spline import (
    SplineInstance,
    operator_spline_min,
    solve_spline_point,
    spline_global_solution,
    spline_solvability,
)

__version__ = "0.1.0"
