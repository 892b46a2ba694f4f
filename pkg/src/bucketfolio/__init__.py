"""Score-bucket portfolio backtests.

Partition assets by score, run minimum-variance, equally weighted and
market-cap weighted strategies through a rolling one-day-hold out-of-sample
backtest, and compare buckets with block-bootstrap performance tests.
"""

__version__ = "0.1.0"

from .backtest import BacktestConfig, BacktestResult, RollingBacktest, run_rolling_backtest
from .bucketing import BucketAssignment, ScoreBucketer, assign_buckets, bucket_sizes
from .covariance import CovarianceMatrix, RidgeCovariance, estimate_covariance
from .data import (
    CapPanel,
    PanelDescriptives,
    ReturnPanel,
    ScoreVector,
    compute_descriptives,
    load_cap_panel,
    load_return_panel,
    load_scores,
)
from .inference import BootstrapParams, TestResult, sharpe_diff_test, star_annotation, variance_diff_test
from .metrics import PerformanceReport, annualize, oos_mean, oos_variance, sharpe, var95, wealth_curve
from .optimizer import SolveDiagnostics, solve_min_variance
from .strategies import EquallyWeighted, MarketCapWeighted, MinimumVariance, StrategyId, ew_weights, mc_weights
from .synthetic import make_synthetic_dataset

__all__ = [
    "BacktestConfig",
    "BacktestResult",
    "BootstrapParams",
    "BucketAssignment",
    "CapPanel",
    "CovarianceMatrix",
    "EquallyWeighted",
    "MarketCapWeighted",
    "MinimumVariance",
    "PanelDescriptives",
    "PerformanceReport",
    "ReturnPanel",
    "RidgeCovariance",
    "RollingBacktest",
    "ScoreBucketer",
    "ScoreVector",
    "SolveDiagnostics",
    "StrategyId",
    "TestResult",
    "annualize",
    "assign_buckets",
    "bucket_sizes",
    "compute_descriptives",
    "estimate_covariance",
    "ew_weights",
    "load_cap_panel",
    "load_return_panel",
    "load_scores",
    "make_synthetic_dataset",
    "mc_weights",
    "oos_mean",
    "oos_variance",
    "run_rolling_backtest",
    "sharpe",
    "sharpe_diff_test",
    "solve_min_variance",
    "star_annotation",
    "var95",
    "variance_diff_test",
    "wealth_curve",
]
