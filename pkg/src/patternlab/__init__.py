"""Asymptotic pattern recovery for polyhedral-gauge regularizers.

Tools for studying which sign/cluster/rank patterns penalized
least-squares estimators (Lasso, Generalized and Fused Lasso, SLOPE)
recover as the sample size grows: limiting-objective solvers,
subdifferential geometry, recovery-probability estimators, and the
multi-step refitting pipeline, plus a config-driven experiment CLI.
"""

from .asymptotics import (
    IrrepReport,
    ModelSpec,
    RecoveryEstimate,
    attainability_check,
    irrepresentability_check,
    recovery_probability_closed_form,
    recovery_probability_direct,
    reduced_ols_baseline,
    rmse_curve,
    sample_asymptotic_error,
    zeta_law,
)
from .estimators import (
    Dataset,
    PipelineResult,
    empirical_recovery_rate,
    fit_stage1,
    generate_data,
    three_step,
    three_step_pipeline,
    two_step,
    two_step_recovery_rate,
)
from .numerics import (
    Basis,
    RngStream,
    SPDMatrix,
    block_covariance,
    equicorrelation,
    gaussian_sample,
    matrix_sqrt,
    weighted_projection,
)
from .polytope import (
    contains,
    contains_ri,
    dimension,
    directional_subdifferential,
    enumerate_vertices,
    hausdorff_distance,
    membership_residual,
    representative_point,
    subdifferential_at,
)
from .regularizers import (
    ConcaveFusedTuning,
    Pattern,
    PenaltySpec,
    check_concavified,
    cluster_partition,
    concavified_sequence,
    directional_derivative,
    fused_lasso,
    gen_lasso,
    lasso,
    limiting_pattern,
    pattern_basis,
    pattern_of,
    pattern_representative,
    penalty_value,
    ridge,
    slope,
    slope_bh,
    slope_linear,
)
from .solvers import (
    SolveReport,
    SolverConfig,
    isotonic_decreasing,
    prox_penalty,
    prox_slope,
    prox_slope_directional,
    solve_penalized_ls,
    solve_V_min,
)

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "ConcaveFusedTuning",
    "Dataset",
    "IrrepReport",
    "ModelSpec",
    "Pattern",
    "PenaltySpec",
    "PipelineResult",
    "RecoveryEstimate",
    "RngStream",
    "SPDMatrix",
    "SolveReport",
    "SolverConfig",
    "attainability_check",
    "block_covariance",
    "check_concavified",
    "cluster_partition",
    "concavified_sequence",
    "contains",
    "contains_ri",
    "dimension",
    "directional_derivative",
    "directional_subdifferential",
    "empirical_recovery_rate",
    "enumerate_vertices",
    "equicorrelation",
    "fit_stage1",
    "fused_lasso",
    "gaussian_sample",
    "gen_lasso",
    "generate_data",
    "hausdorff_distance",
    "irrepresentability_check",
    "isotonic_decreasing",
    "lasso",
    "limiting_pattern",
    "matrix_sqrt",
    "membership_residual",
    "pattern_basis",
    "pattern_of",
    "pattern_representative",
    "penalty_value",
    "prox_penalty",
    "prox_slope",
    "prox_slope_directional",
    "recovery_probability_closed_form",
    "recovery_probability_direct",
    "reduced_ols_baseline",
    "representative_point",
    "ridge",
    "rmse_curve",
    "sample_asymptotic_error",
    "slope",
    "slope_bh",
    "slope_linear",
    "solve_V_min",
    "solve_penalized_ls",
    "subdifferential_at",
    "three_step",
    "three_step_pipeline",
    "two_step",
    "two_step_recovery_rate",
    "weighted_projection",
    "zeta_law",
]
