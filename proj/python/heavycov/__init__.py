"""Robust covariance estimation for heavy-tailed, non-centred data."""

from ._core import (  # noqa: F401
    ConvergenceError,
    DegenerateSpectrumError,
    LepskiReport,
    MoMResult,
    SampleSizeError,
    effective_rank,
    estimate_fixed_sigma,
    fro_norm,
    geometric_median,
    lepski_estimate,
    median_of_means,
    nuclear_norm,
    op_norm,
    pca_projector,
    psi,
    sample_covariance,
    sample_gaussian,
    sample_student_t,
    soft_threshold,
    subspace_dist,
    sym_eigen,
    trace,
    truncated_cov,
    truncation_ratio,
    truncation_ratio_bounds,
)

__version__ = "0.1.0"
