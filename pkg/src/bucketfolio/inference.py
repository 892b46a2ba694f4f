"""Robust pairwise performance tests for two correlated return series.

Both tests work on the moment vector ``u = E[(a, b, a^2, b^2)]`` of the
paired daily returns and a smooth statistic ``f(u)``:

* Sharpe difference: ``f(u) = SR(a) - SR(b)``
* log-variance difference: ``f(u) = log var(a) - log var(b)``

The standard error of ``f(u_hat)`` follows from the delta method with a
Bartlett-kernel HAC estimate of the long-run covariance of the moments, lag
window equal to the block length ``b``. The null distribution of the
studentized statistic is approximated by a circular block bootstrap of the
pairs ``(a_t, b_t)``; each resample is studentized with the block-sum
covariance estimator natural for blocks of length ``b``, and the two-sided
p-value is ``(1 + #{|d*| >= |d|}) / (B + 1)``.

Resamples are drawn in fixed-size chunks, chunk ``c`` from its own Philox
counter stream keyed by the seed, so results do not depend on ``n_jobs``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import OutOfRange, ZeroVariance
from .validation import check_paired_series, check_positive_int

__all__ = [
    "TestKind",
    "BootstrapParams",
    "TestResult",
    "sharpe_diff_test",
    "variance_diff_test",
    "star_annotation",
    "hac_covariance",
]

MIN_LENGTH = 50
CHUNK_SIZE = 250


class TestKind(str, enum.Enum):
    __test__ = False

    SHARPE_DIFF = "SharpeDiff"
    VARIANCE_DIFF = "VarianceDiff"


@dataclass(frozen=True)
class BootstrapParams:
    """Block length, number of resamples, seed and worker count."""

    block_length: int = 5
    n_resamples: int = 4999
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        check_positive_int(self.block_length, "block_length")
        check_positive_int(self.n_resamples, "n_resamples")
        check_positive_int(self.seed, "seed", minimum=0)


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    kind: TestKind
    statistic: float
    p_value: float
    stars: str
    difference: float
    std_error: float
    block_length: int
    resamples: int
    seed: int


def star_annotation(p):
    """``***`` for p <= 0.01, ``**`` for p <= 0.05, ``*`` for p <= 0.10, else ``""``."""
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise OutOfRange(f"p-value {p} outside [0, 1]")
    if p <= 0.01:
        return "***"
    if p <= 0.05:
        return "**"
    if p <= 0.10:
        return "*"
    return ""


# -- statistics on moment vectors ---------------------------------------------
# u has trailing axis (mean_a, mean_b, mean_a2, mean_b2)


def _sharpe_diff(u):
    var_a = u[..., 2] - u[..., 0] ** 2
    var_b = u[..., 3] - u[..., 1] ** 2
    sd_a, sd_b = np.sqrt(var_a), np.sqrt(var_b)
    value = u[..., 0] / sd_a - u[..., 1] / sd_b
    grad = np.stack(
        [
            u[..., 2] / sd_a**3,
            -u[..., 3] / sd_b**3,
            -u[..., 0] / (2 * sd_a**3),
            u[..., 1] / (2 * sd_b**3),
        ],
        axis=-1,
    )
    return value, grad


def _log_variance_diff(u):
    var_a = u[..., 2] - u[..., 0] ** 2
    var_b = u[..., 3] - u[..., 1] ** 2
    value = np.log(var_a) - np.log(var_b)
    grad = np.stack([-2 * u[..., 0] / var_a, 2 * u[..., 1] / var_b, 1 / var_a, -1 / var_b], axis=-1)
    return value, grad


_STATISTICS = {TestKind.SHARPE_DIFF: _sharpe_diff, TestKind.VARIANCE_DIFF: _log_variance_diff}


def hac_covariance(y, bandwidth):
    """Bartlett-kernel long-run covariance of the centered rows of ``y``.

    ``Gamma_0 + sum_{j<bandwidth} (1 - j/bandwidth) (Gamma_j + Gamma_j')``
    with ``Gamma_j = sum_t y_t y_{t-j}' / M``.
    """
    y = y - y.mean(axis=0)
    M = y.shape[0]
    psi = y.T @ y / M
    for j in range(1, min(bandwidth, M)):
        gamma = y[j:].T @ y[:-j] / M
        psi += (1 - j / bandwidth) * (gamma + gamma.T)
    return psi


def _std_error(grad, psi, M):
    quad = np.einsum("...k,...km,...m->...", grad, psi, grad)
    return np.sqrt(np.maximum(quad, 0.0) / M)


class _BlockSampler:
    """Circular block sums of the moment series for every start index."""

    def __init__(self, z, block_length):
        M = z.shape[0]
        b = min(block_length, M)
        self.M = M
        self.b = b
        self.n_blocks = -(-M // b)
        self.tail = M - (self.n_blocks - 1) * b
        extended = np.concatenate([z, z[:b]], axis=0)
        self.full = sliding_window_view(extended, b, axis=0)[:M].sum(axis=-1)
        self.last = sliding_window_view(extended, self.tail, axis=0)[:M].sum(axis=-1)

    def chunk(self, seed, index, size, statistic, observed):
        """Studentized bootstrap deviations for one chunk of resamples."""
        rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, index, 0]))
        starts = rng.integers(0, self.M, size=(size, self.n_blocks))
        head = self.full[starts[:, :-1]]
        last = self.last[starts[:, -1]]
        u = (head.sum(axis=1) + last) / self.M
        dev_head = head - self.b * u[:, None, :]
        dev_last = last - self.tail * u
        psi = dev_head.transpose(0, 2, 1) @ dev_head
        psi += dev_last[:, :, None] * dev_last[:, None, :]
        psi /= self.M
        value, grad = statistic(u)
        se = _std_error(grad, psi, self.M)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (value - observed) / se


def _bootstrap_test(kind, a, b, params):
    params = params or BootstrapParams()
    a, b = check_paired_series(a, b, min_length=MIN_LENGTH)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ZeroVariance("both series need positive variance")
    statistic = _STATISTICS[kind]
    z = np.column_stack([a, b, a * a, b * b])
    M = z.shape[0]

    u_hat = z.mean(axis=0)
    observed, grad = statistic(u_hat)
    se = float(_std_error(grad, hac_covariance(z, params.block_length), M))
    if observed == 0:
        t_stat = 0.0
    elif se > 0:
        t_stat = float(observed / se)
    else:
        t_stat = math.copysign(math.inf, observed)

    sampler = _BlockSampler(z, params.block_length)
    sizes = [CHUNK_SIZE] * (params.n_resamples // CHUNK_SIZE)
    if params.n_resamples % CHUNK_SIZE:
        sizes.append(params.n_resamples % CHUNK_SIZE)
    tasks = [(params.seed, i, size, statistic, observed) for i, size in enumerate(sizes)]
    if params.n_jobs == 1 or len(tasks) == 1:
        chunks = [sampler.chunk(*t) for t in tasks]
    else:
        chunks = Parallel(n_jobs=params.n_jobs, prefer="threads")(delayed(sampler.chunk)(*t) for t in tasks)
    d_star = np.concatenate(chunks)

    # undefined resamples count against rejection
    exceed = np.isnan(d_star) | (np.abs(d_star) >= abs(t_stat))
    p_value = (1 + int(exceed.sum())) / (params.n_resamples + 1)
    return TestResult(
        kind=kind,
        statistic=t_stat,
        p_value=p_value,
        stars=star_annotation(p_value),
        difference=float(observed),
        std_error=se,
        block_length=params.block_length,
        resamples=params.n_resamples,
        seed=params.seed,
    )


def sharpe_diff_test(a, b, params=None):
    """Test equality of the Sharpe ratios of two paired return series.

    Parameters
    ----------
    a, b : array-like of shape (M,)
        Paired daily returns, ``M >= 50``.
    params : BootstrapParams, optional

    Returns
    -------
    TestResult
        ``statistic`` is the studentized difference ``SR(a) - SR(b)``.
    """
    return _bootstrap_test(TestKind.SHARPE_DIFF, a, b, params)


def variance_diff_test(a, b, params=None):
    """Test equality of the variances of two paired return series.

    Works with the log-variance difference, so scaling both series (for
    instance annualizing) leaves the result unchanged.
    """
    return _bootstrap_test(TestKind.VARIANCE_DIFF, a, b, params)
