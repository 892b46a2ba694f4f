"""Portfolio weighting strategies as scikit-learn style estimators.

Each strategy is fitted on a look-back window of returns (oldest row first)
and exposes ``weights_``. ``predict`` turns a matrix of later returns into
portfolio returns under those fixed weights.
"""

import enum
import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .covariance import DEFAULT_RIDGE_SCALE, estimate_covariance
from .exceptions import NonPositiveCap
from .optimizer import DEFAULT_MAX_ITER, DEFAULT_TOL, solve_min_variance
from .validation import check_positive_int, check_returns

__all__ = [
    "StrategyId",
    "EquallyWeighted",
    "MarketCapWeighted",
    "MinimumVariance",
    "ew_weights",
    "mc_weights",
    "make_strategy",
    "strategy_weights",
]


class StrategyId(str, enum.Enum):
    MINIMUM_VARIANCE = "MV"
    EQUALLY_WEIGHTED = "EW"
    MARKET_CAP_WEIGHTED = "MC"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        aliases = {
            "MINIMUMVARIANCE": cls.MINIMUM_VARIANCE,
            "EQUALLYWEIGHTED": cls.EQUALLY_WEIGHTED,
            "MARKETCAPWEIGHTED": cls.MARKET_CAP_WEIGHTED,
        }
        if key in aliases:
            return aliases[key]
        return cls(key)


def ew_weights(n):
    """Equal weights ``1/n``; the last weight absorbs the rounding residue."""
    n = check_positive_int(n, "n")
    w = np.full(n, 1.0 / n)
    w[-1] = 1.0 - math.fsum(w[:-1])
    return w


def mc_weights(caps):
    """Weights proportional to market capitalization."""
    caps = np.asarray(caps, dtype=np.float64)
    if caps.ndim != 1 or caps.size == 0:
        raise ValueError("caps must be a non-empty 1-D vector")
    if not np.all(np.isfinite(caps)) or np.any(caps <= 0):
        raise NonPositiveCap(f"market caps must be positive and finite, got {caps}")
    return caps / caps.sum()


class _BaseStrategy(BaseEstimator):
    strategy_id = None

    def predict(self, X):
        """Portfolio returns ``X @ weights_``."""
        check_is_fitted(self, "weights_")
        X = check_returns(np.atleast_2d(X))
        return X @ self.weights_

    def _check_window(self, X):
        X = check_returns(X)
        self.n_features_in_ = X.shape[1]
        return X


class EquallyWeighted(_BaseStrategy):
    """Equal capital in every asset; the window content is ignored."""

    strategy_id = StrategyId.EQUALLY_WEIGHTED

    def fit(self, X, y=None, market_caps=None):
        X = self._check_window(X)
        self.weights_ = ew_weights(X.shape[1])
        return self

    def rolling_weights(self, X, market_caps, window_size):
        n_steps = X.shape[0] - window_size
        return np.broadcast_to(ew_weights(X.shape[1]), (n_steps, X.shape[1]))


class MarketCapWeighted(_BaseStrategy):
    """Weights proportional to the market caps on the last window date."""

    strategy_id = StrategyId.MARKET_CAP_WEIGHTED

    def fit(self, X, y=None, market_caps=None):
        X = self._check_window(X)
        if market_caps is None:
            raise ValueError("MarketCapWeighted.fit requires market_caps")
        caps = np.asarray(market_caps, dtype=np.float64)
        if caps.ndim == 2:
            caps = caps[-1]
        if caps.shape != (X.shape[1],):
            raise ValueError(f"market_caps has shape {caps.shape}, expected ({X.shape[1]},)")
        self.weights_ = mc_weights(caps)
        return self

    def rolling_weights(self, X, market_caps, window_size):
        caps = np.asarray(market_caps, dtype=np.float64)[window_size - 1 : X.shape[0] - 1]
        if not np.all(np.isfinite(caps)) or np.any(caps <= 0):
            raise NonPositiveCap("market caps must be positive and finite")
        return caps / caps.sum(axis=1, keepdims=True)


class MinimumVariance(_BaseStrategy):
    """Long-only minimum-variance weights from a ridge-certified sample covariance.

    Parameters
    ----------
    ridge_scale : float, default=1e-8
    tol : float, default=1e-8
        KKT residual bound.
    max_iter : int, default=10000
    warm_start : bool, default=False
        Start the solver from the previous ``weights_`` when their dimension
        matches. The optimum is unique, so this only changes the run time.

    Attributes
    ----------
    weights_ : ndarray of shape (n_assets,)
    covariance_ : CovarianceMatrix
    diagnostics_ : SolveDiagnostics
    """

    strategy_id = StrategyId.MINIMUM_VARIANCE

    def __init__(self, ridge_scale=DEFAULT_RIDGE_SCALE, tol=DEFAULT_TOL,
                 max_iter=DEFAULT_MAX_ITER, warm_start=False):
        self.ridge_scale = ridge_scale
        self.tol = tol
        self.max_iter = max_iter
        self.warm_start = warm_start

    def fit(self, X, y=None, market_caps=None):
        X = self._check_window(X)
        w0 = None
        if self.warm_start and getattr(self, "weights_", None) is not None:
            if self.weights_.shape == (X.shape[1],):
                w0 = self.weights_
        self.covariance_ = estimate_covariance(X, self.ridge_scale)
        self.weights_, self.diagnostics_ = solve_min_variance(
            self.covariance_, tol=self.tol, max_iter=self.max_iter, w0=w0
        )
        return self


_STRATEGIES = {
    StrategyId.MINIMUM_VARIANCE: MinimumVariance,
    StrategyId.EQUALLY_WEIGHTED: EquallyWeighted,
    StrategyId.MARKET_CAP_WEIGHTED: MarketCapWeighted,
}


def make_strategy(strategy, **params):
    """Instantiate the estimator for a strategy id ("MV", "EW" or "MC")."""
    cls = _STRATEGIES[StrategyId.parse(strategy)]
    if cls is MinimumVariance:
        return cls(**params)
    return cls()


def strategy_weights(strategy, window, caps=None, **optimizer_params):
    """Weights for one rebalance: dispatch on the strategy id and fit."""
    est = make_strategy(strategy, **optimizer_params)
    return est.fit(window, market_caps=caps).weights_
