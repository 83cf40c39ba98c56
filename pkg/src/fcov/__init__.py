"""Change point tests for the covariance operator of functional time series."""

from .core import (
    FunctionalSample,
    GridDomain,
    VolumeSeries,
    demean,
    detrend_polynomial,
    inner_product,
    sample_mean,
)
from .covariance import (
    CovarianceKernel,
    EigenSystem,
    SeparableEigenSystem,
    dump_eigensystem,
    eigendecompose,
    eigendecompose_gram,
    empirical_covariance,
    positive_rank,
    separable_covariance,
)
from .scores import (
    LongRunDiag,
    ResidualSeries,
    ScoreMatrix,
    ScoreProductSeries,
    block_longrun_variance,
    compute_scores,
    correct_residuals,
    default_block_length,
    estimate_component_changepoint,
    estimate_component_episode,
    gaussian_sigma_diag,
    vech_products,
)
from .cusum import (
    PreselectionResult,
    StatisticValue,
    functional_norm_oracle,
    functional_weights,
    lambda_max,
    lambda_max_epidemic,
    omega_amoc,
    omega_epidemic,
    omega_functional,
    partial_sums,
    preselect_pairs,
)
from .bootstrap import (
    KINDS,
    BootstrapConfig,
    BootstrapOutcome,
    bootstrap_test,
    circular_block_resample,
    observed_statistic,
    replicate_starts,
)
from .limit_laws import FUNCTIONALS, LimitLawSample, cache_path, cached_quantile, simulate_limit
from .simulate import (
    MethodSpec,
    PowerTable,
    SimulationConfig,
    fourier_basis,
    generate_series,
    run_size_power,
    setting_sigmas,
    stationary_covariance,
    tridiagonal_operator,
)
from .io import read_csv_matrix, read_volume, write_csv_matrix, write_volume
from .kernels import BACKEND, available_backends

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BootstrapConfig",
    "BootstrapOutcome",
    "CovarianceKernel",
    "EigenSystem",
    "FUNCTIONALS",
    "FunctionalSample",
    "GridDomain",
    "KINDS",
    "LimitLawSample",
    "LongRunDiag",
    "MethodSpec",
    "PowerTable",
    "PreselectionResult",
    "ResidualSeries",
    "ScoreMatrix",
    "ScoreProductSeries",
    "SeparableEigenSystem",
    "SimulationConfig",
    "StatisticValue",
    "VolumeSeries",
    "available_backends",
    "block_longrun_variance",
    "bootstrap_test",
    "cache_path",
    "cached_quantile",
    "circular_block_resample",
    "compute_scores",
    "correct_residuals",
    "default_block_length",
    "demean",
    "detrend_polynomial",
    "dump_eigensystem",
    "eigendecompose",
    "eigendecompose_gram",
    "empirical_covariance",
    "estimate_component_changepoint",
    "estimate_component_episode",
    "fourier_basis",
    "functional_norm_oracle",
    "functional_weights",
    "gaussian_sigma_diag",
    "generate_series",
    "inner_product",
    "lambda_max",
    "lambda_max_epidemic",
    "observed_statistic",
    "omega_amoc",
    "omega_epidemic",
    "omega_functional",
    "partial_sums",
    "positive_rank",
    "preselect_pairs",
    "read_csv_matrix",
    "read_volume",
    "replicate_starts",
    "run_size_power",
    "sample_mean",
    "separable_covariance",
    "setting_sigmas",
    "simulate_limit",
    "stationary_covariance",
    "tridiagonal_operator",
    "vech_products",
    "write_csv_matrix",
    "write_volume",
]
