"""Sample covariance with a minimal ridge to certify positive definiteness."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator

from .exceptions import DegenerateWindow, NotPositiveDefinite
from .validation import check_returns

__all__ = [
    "CovarianceMatrix",
    "RidgeCovariance",
    "estimate_covariance",
    "pd_certificate",
    "sample_covariance",
]

DEFAULT_RIDGE_SCALE = 1e-8
MAX_ESCALATIONS = 8


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric positive definite covariance estimate.

    Attributes
    ----------
    values : ndarray of shape (n, n)
    regularization : float
        Ridge ``delta`` added to the diagonal (0 when none was needed).
    cholesky : ndarray of shape (n, n)
        Lower Cholesky factor of ``values``; the positive definiteness certificate.
    assets : tuple of str or None
    """

    values: np.ndarray
    regularization: float
    cholesky: np.ndarray
    assets: tuple = None

    @property
    def n(self):
        return self.values.shape[0]


def pd_certificate(matrix):
    """Lower Cholesky factor of ``matrix`` if it is numerically positive definite.

    A factorization whose smallest pivot is at round-off level relative to the
    largest diagonal entry is rejected: such a matrix is singular in all but
    name and would make the optimizer ill-posed. Returns ``None`` on failure.
    """
    n = matrix.shape[0]
    try:
        L = linalg.cholesky(matrix, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None
    pivots = np.diag(L) ** 2
    floor = n * np.finfo(np.float64).eps * np.max(np.diag(matrix))
    if not np.all(pivots > floor):
        return None
    return L


def sample_covariance(X):
    """Two-pass sample covariance with denominator ``T - 1``."""
    centered = X - X.mean(axis=0)
    S = centered.T @ centered / (X.shape[0] - 1)
    return (S + S.T) / 2


def estimate_covariance(window, ridge_scale=DEFAULT_RIDGE_SCALE, assets=None):
    """Estimate a positive definite covariance matrix from a return window.

    The sample covariance is returned unchanged when it passes
    :func:`pd_certificate`. Otherwise ``delta * I`` is added with
    ``delta = ridge_scale * trace(S) / n``, multiplying ``delta`` by 10 until
    the certificate succeeds, at most 8 times.

    Parameters
    ----------
    window : array-like of shape (T_w, n)
        Returns, oldest first. ``T_w >= 2``.
    ridge_scale : float, default=1e-8
    assets : sequence of str, optional

    Returns
    -------
    CovarianceMatrix

    Raises
    ------
    DegenerateWindow
        All columns are constant (trace of the sample covariance is zero).
    NotPositiveDefinite
        The escalation cap was reached.
    """
    X = check_returns(window, min_rows=2)
    if ridge_scale < 0:
        raise ValueError("ridge_scale must be non-negative")
    n = X.shape[1]
    S = sample_covariance(X)
    trace = float(np.trace(S))
    if not trace > 0:
        raise DegenerateWindow("sample covariance has zero trace (constant window)")

    # fewer than n+1 observations: S has rank < n, skip the unregularized attempt
    if X.shape[0] - 1 >= n:
        L = pd_certificate(S)
        if L is not None:
            return CovarianceMatrix(S, 0.0, L, _assets(assets))

    delta = ridge_scale * trace / n
    for _ in range(MAX_ESCALATIONS + 1):
        if delta > 0:
            R = S + delta * np.eye(n)
            L = pd_certificate(R)
            if L is not None:
                return CovarianceMatrix(R, float(delta), L, _assets(assets))
        delta *= 10
    raise NotPositiveDefinite(
        f"covariance not positive definite after {MAX_ESCALATIONS} ridge escalations "
        f"(ridge_scale={ridge_scale})"
    )


def _assets(assets):
    return None if assets is None else tuple(assets)


class RidgeCovariance(BaseEstimator):
    """Estimator form of :func:`estimate_covariance`.

    Parameters
    ----------
    ridge_scale : float, default=1e-8
        Initial ridge relative to the average variance ``trace(S) / n``.

    Attributes
    ----------
    covariance_ : ndarray of shape (n_assets, n_assets)
    ridge_ : float
    cholesky_ : ndarray of shape (n_assets, n_assets)
    n_features_in_ : int
    """

    def __init__(self, ridge_scale=DEFAULT_RIDGE_SCALE):
        self.ridge_scale = ridge_scale

    def fit(self, X, y=None):
        result = estimate_covariance(X, self.ridge_scale)
        self.covariance_ = result.values
        self.ridge_ = result.regularization
        self.cholesky_ = result.cholesky
        self.n_features_in_ = result.n
        return self
