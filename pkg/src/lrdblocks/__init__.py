"""Block resampling inference for long-range dependent time series.

Simulation of Gaussian-subordinated LRD processes, block-based variance
estimation for sample means and statistical functionals, theoretically
optimal and data-driven block-size selection, bootstrap confidence
intervals, and a bootstrap test of Hermite rank.
"""

from .estimators import (
    BlockScheme,
    VarianceEstimate,
    block_means,
    limit_variance,
    overlapping_means,
    subordinated_covariances,
    target_variance,
    variance_estimator,
)
from .experiments import (
    BootstrapInterval,
    ExperimentConfig,
    TableRun,
    bootstrap_ci,
    coverage_study,
    mse_curve,
    optimal_block_table,
    process_mean,
    pushforward_cdf,
    pushforward_quantile,
    rank_test_power,
    trimmed_influence_spec,
    trimmed_mean_parameter,
    variance_mse_table,
    winsorized_influence_spec,
)
from .functionals import (
    LEstimator,
    MEstimator,
    SmoothOfMeans,
    TrimmedMean,
    block_jackknife,
    huber_functional,
    influence_estimates,
    mean_functional,
    plugin_variance,
)
from .hermite import HermiteSpec, hermite_coefficients, hermite_poly, ranks, spec_from_coefficients
from .models import (
    FGN,
    ExplicitModel,
    Farima,
    exact_covariance,
    gaussian_sample_paths,
    preset_transform,
    replicate_rng,
    simulate_gaussian,
)
from .ranktest import (
    RankTestConfig,
    RankTestResult,
    anderson_darling,
    block_residuals,
    fbm_increments,
    ks_statistic,
    rank_test,
)
from .selection import (
    SelectionConfig,
    SelectionResult,
    candidate_grid,
    empirical_mse,
    local_whittle,
    minimize_empirical_mse,
    two_scale_block_estimate,
)
from .theory import (
    TheoryReport,
    bias_expansion,
    euler_generalized_constant,
    mse_theoretical,
    optimal_block,
    variance_expansion,
)

__version__ = "0.1.0"

__all__ = [
    "BlockScheme",
    "BootstrapInterval",
    "ExperimentConfig",
    "ExplicitModel",
    "FGN",
    "Farima",
    "HermiteSpec",
    "LEstimator",
    "MEstimator",
    "RankTestConfig",
    "RankTestResult",
    "SelectionConfig",
    "SelectionResult",
    "SmoothOfMeans",
    "TableRun",
    "TheoryReport",
    "TrimmedMean",
    "VarianceEstimate",
    "anderson_darling",
    "bias_expansion",
    "block_jackknife",
    "block_means",
    "block_residuals",
    "bootstrap_ci",
    "candidate_grid",
    "coverage_study",
    "empirical_mse",
    "euler_generalized_constant",
    "exact_covariance",
    "fbm_increments",
    "gaussian_sample_paths",
    "hermite_coefficients",
    "hermite_poly",
    "huber_functional",
    "influence_estimates",
    "ks_statistic",
    "limit_variance",
    "local_whittle",
    "mean_functional",
    "minimize_empirical_mse",
    "mse_curve",
    "mse_theoretical",
    "optimal_block",
    "optimal_block_table",
    "overlapping_means",
    "plugin_variance",
    "preset_transform",
    "process_mean",
    "pushforward_cdf",
    "pushforward_quantile",
    "rank_test",
    "rank_test_power",
    "ranks",
    "replicate_rng",
    "simulate_gaussian",
    "spec_from_coefficients",
    "subordinated_covariances",
    "target_variance",
    "trimmed_influence_spec",
    "trimmed_mean_parameter",
    "two_scale_block_estimate",
    "variance_estimator",
    "variance_expansion",
    "variance_mse_table",
    "winsorized_influence_spec",
]
