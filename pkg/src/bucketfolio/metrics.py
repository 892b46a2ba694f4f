"""Out-of-sample performance measures of a daily portfolio return series."""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import TotalLoss, TooShort, ZeroVariance
from .validation import check_positive_int, check_series

__all__ = [
    "PerformanceReport",
    "oos_mean",
    "oos_variance",
    "sharpe",
    "var95",
    "annualize",
    "wealth_curve",
    "performance_report",
]

VAR_LEVEL = 0.05
VAR_MIN_LENGTH = 20


@dataclass(frozen=True)
class PerformanceReport:
    """Daily and annualized summary of one out-of-sample series.

    ``sharpe_daily`` is mean over standard deviation of the daily series with a
    zero risk-free rate (``nan`` when the variance is zero); ``var95`` is the
    empirical 5% quantile of daily returns, negative for a loss.
    """

    M: int
    mean_daily: float
    variance_daily: float
    sharpe_daily: float
    var95: float
    mean_annualized: float = float("nan")
    variance_annualized: float = float("nan")
    sd_annualized: float = float("nan")
    annualization: int = 1


def oos_mean(series):
    """Arithmetic mean of the realized portfolio returns."""
    x = check_series(series)
    return float(np.mean(x))


def oos_variance(series):
    """Sample variance with denominator ``M - 1``."""
    x = check_series(series, min_length=2)
    if np.ptp(x) == 0:
        return 0.0  # exact, free of mean rounding
    return float(np.var(x, ddof=1))


def sharpe(series):
    """Daily Sharpe ratio ``mean / sd`` with a zero risk-free rate."""
    x = check_series(series, min_length=2)
    var = oos_variance(x)
    if not var > 0:
        raise ZeroVariance("Sharpe ratio undefined for a constant series")
    return float(np.mean(x) / np.sqrt(var))


def var95(series):
    """Empirical 5% quantile of daily returns.

    Linear interpolation between order statistics at 1-based position
    ``h = (M - 1) * 0.05 + 1``.
    """
    x = check_series(series)
    if x.size < VAR_MIN_LENGTH:
        raise TooShort(f"VaR needs at least {VAR_MIN_LENGTH} observations, got {x.size}")
    return float(np.quantile(x, VAR_LEVEL, method="linear"))


def annualize(report, annualization):
    """Fill in the annualized fields: ``a * mean`` and ``a * variance``."""
    a = check_positive_int(annualization, "annualization")
    variance = a * report.variance_daily
    return replace(
        report,
        mean_annualized=a * report.mean_daily,
        variance_annualized=variance,
        sd_annualized=float(np.sqrt(variance)),
        annualization=a,
    )


def wealth_curve(series):
    """Cumulative value of one unit invested: ``cumprod(1 + r)``."""
    x = check_series(series)
    if np.any(x <= -1):
        raise TotalLoss(f"return of {x[x <= -1][0]} wipes out the portfolio")
    return np.cumprod(1.0 + x)


def performance_report(series, annualization=252):
    x = check_series(series, min_length=VAR_MIN_LENGTH)
    variance = oos_variance(x)
    report = PerformanceReport(
        M=x.size,
        mean_daily=oos_mean(x),
        variance_daily=variance,
        sharpe_daily=sharpe(x) if variance > 0 else float("nan"),
        var95=var95(x),
    )
    return annualize(report, annualization)
