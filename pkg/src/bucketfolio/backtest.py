"""Rolling-window, one-day-hold out-of-sample backtests.

For a window size ``ws`` and a panel of ``T`` days the weights fitted on rows
``t-ws+1 .. t`` are held over day ``t+1``; the window then drops its oldest row
and takes the next one. This yields ``M = T - ws`` out-of-sample returns per
(bucket, strategy) pair.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, clone

from .covariance import DEFAULT_RIDGE_SCALE
from .exceptions import BacktestFailure, NumericalError, WindowTooLong
from .optimizer import DEFAULT_MAX_ITER, DEFAULT_TOL
from .strategies import MinimumVariance, StrategyId, make_strategy
from .validation import check_positive_int, check_returns

log = logging.getLogger(__name__)

__all__ = ["BacktestConfig", "PairResult", "BacktestResult", "RollingBacktest", "run_rolling_backtest"]

ALL_STRATEGIES = (StrategyId.MINIMUM_VARIANCE, StrategyId.EQUALLY_WEIGHTED, StrategyId.MARKET_CAP_WEIGHTED)


@dataclass(frozen=True)
class BacktestConfig:
    """Settings shared by every (bucket, strategy) pair of one backtest."""

    window_size: int
    buckets: object
    strategies: tuple = ALL_STRATEGIES
    annualization: int = 252
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    ridge_scale: float = DEFAULT_RIDGE_SCALE
    warm_start: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        check_positive_int(self.window_size, "window_size", minimum=2)
        object.__setattr__(self, "strategies", tuple(StrategyId.parse(s) for s in self.strategies))

    def make_strategy(self, strategy):
        if StrategyId.parse(strategy) is StrategyId.MINIMUM_VARIANCE:
            return MinimumVariance(self.ridge_scale, self.tol, self.max_iter, self.warm_start)
        return make_strategy(strategy)


@dataclass
class PairResult:
    bucket: int
    strategy: StrategyId
    assets: tuple
    oos_returns: np.ndarray
    weights: np.ndarray
    n_not_converged: int = 0
    max_kkt_residual: float = 0.0

    @property
    def M(self):
        return self.oos_returns.shape[0]


@dataclass
class BacktestResult:
    """Out-of-sample returns and weight paths for every (bucket, strategy) pair.

    ``oos_dates[i]`` is the day on which ``oos_returns[i]`` was realized; the
    weights in row ``i`` of a weight path were fitted on the window ending the
    trading day before.
    """

    window_size: int
    oos_dates: pd.DatetimeIndex
    fit_dates: pd.DatetimeIndex
    pairs: dict = field(default_factory=dict)
    empty_buckets: tuple = ()

    @property
    def M(self):
        return len(self.oos_dates)

    def __getitem__(self, key):
        bucket, strategy = key
        return self.pairs[(bucket, StrategyId.parse(strategy))]

    def returns_frame(self):
        """Out-of-sample returns, one column per ``<strategy>_PT<bucket>``."""
        data = {
            f"{s.value}_PT{b}": pair.oos_returns for (b, s), pair in sorted(self.pairs.items(), key=_pair_key)
        }
        frame = pd.DataFrame(data, index=self.oos_dates)
        frame.index.name = "date"
        return frame

    def weights_frame(self, bucket, strategy):
        pair = self[bucket, strategy]
        frame = pd.DataFrame(pair.weights, index=self.fit_dates, columns=list(pair.assets))
        frame.index.name = "date"
        return frame

    @property
    def n_not_converged(self):
        return sum(p.n_not_converged for p in self.pairs.values())


def _pair_key(item):
    (bucket, strategy), _ = item
    return (list(StrategyId).index(strategy), bucket)


class RollingBacktest(BaseEstimator):
    """Roll one strategy over a return matrix.

    Parameters
    ----------
    strategy : estimator
        One of the strategy estimators (fit on a window, exposes ``weights_``).
    window_size : int, default=170

    Attributes
    ----------
    oos_returns_ : ndarray of shape (M,)
    weights_ : ndarray of shape (M, n_assets)
    n_not_converged_ : int
        Days on which the optimizer hit its iteration cap; the feasible
        weights it returned were used.
    max_kkt_residual_ : float
    """

    def __init__(self, strategy=None, window_size=170):
        self.strategy = strategy
        self.window_size = window_size

    def fit(self, X, y=None, market_caps=None, dates=None):
        X = check_returns(X, min_rows=2)
        T, n = X.shape
        ws = check_positive_int(self.window_size, "window_size", minimum=2)
        if ws >= T:
            raise WindowTooLong(f"window_size {ws} must be smaller than T={T}")
        if market_caps is not None:
            market_caps = np.asarray(market_caps, dtype=np.float64)
            if market_caps.shape != X.shape:
                raise ValueError(f"market_caps shape {market_caps.shape} differs from returns {X.shape}")
        strategy = clone(self.strategy) if self.strategy is not None else make_strategy("EW")
        M = T - ws

        self.n_not_converged_ = 0
        self.max_kkt_residual_ = 0.0
        if hasattr(strategy, "rolling_weights"):
            weights = np.array(strategy.rolling_weights(X, market_caps, ws))
        else:
            weights = np.empty((M, n))
            for i in range(M):
                end = ws + i  # exclusive; window rows end-ws .. end-1
                window = X[end - ws : end]
                caps = None if market_caps is None else market_caps[end - 1]
                try:
                    strategy.fit(window, market_caps=caps)
                except NumericalError as exc:
                    when = dates[end - 1] if dates is not None else end - 1
                    raise BacktestFailure(None, getattr(strategy, "strategy_id", strategy), when, exc) from exc
                weights[i] = strategy.weights_
                diag = getattr(strategy, "diagnostics_", None)
                if diag is not None:
                    self.max_kkt_residual_ = max(self.max_kkt_residual_, diag.kkt_residual)
                    if not diag.converged:
                        self.n_not_converged_ += 1
        self.weights_ = weights
        self.oos_returns_ = np.einsum("ij,ij->i", weights, X[ws:])
        return self


def _run_pair(config, bucket, strategy, values, caps, assets, dates):
    bt = RollingBacktest(config.make_strategy(strategy), config.window_size)
    try:
        bt.fit(values, market_caps=caps, dates=dates)
    except BacktestFailure as exc:
        raise BacktestFailure(bucket, strategy.value, exc.date, exc.cause) from exc.cause
    if bt.n_not_converged_:
        log.warning("PT%d %s: optimizer hit max_iter on %d days", bucket, strategy.value, bt.n_not_converged_)
    return PairResult(bucket, strategy, tuple(assets), bt.oos_returns_, bt.weights_,
                      bt.n_not_converged_, bt.max_kkt_residual_)


def run_rolling_backtest(panel, caps, config):
    """Backtest every (bucket, strategy) pair of ``config``.

    Parameters
    ----------
    panel : ReturnPanel
    caps : CapPanel or None
        Required when the market-cap strategy is requested.
    config : BacktestConfig

    Returns
    -------
    BacktestResult

    Raises
    ------
    WindowTooLong
        ``window_size >= T``; raised before any computation.
    BacktestFailure
        A covariance/optimizer error, annotated with bucket, strategy and date.
    """
    T = panel.n_periods
    ws = config.window_size
    if ws >= T:
        raise WindowTooLong(f"window_size {ws} must be smaller than T={T}")
    if caps is not None:
        caps.check_aligned(panel)
    elif StrategyId.MARKET_CAP_WEIGHTED in config.strategies:
        raise ValueError("market-cap strategy requested without a cap panel")

    jobs = []
    empty = []
    for bucket in config.buckets.bucket_ids:
        assets = config.buckets.buckets[bucket]
        if not assets:
            empty.append(bucket)
            continue
        values = panel.select(assets)
        cap_values = caps.select(assets) if caps is not None else None
        for strategy in config.strategies:
            use_caps = cap_values if strategy is StrategyId.MARKET_CAP_WEIGHTED else None
            jobs.append((bucket, strategy, values, use_caps, assets))

    if config.n_jobs == 1:
        pairs = [_run_pair(config, b, s, v, c, a, panel.dates) for b, s, v, c, a in jobs]
    else:
        pairs = Parallel(n_jobs=config.n_jobs)(
            delayed(_run_pair)(config, b, s, v, c, a, panel.dates) for b, s, v, c, a in jobs
        )

    result = BacktestResult(
        window_size=ws,
        oos_dates=panel.dates[ws:],
        fit_dates=panel.dates[ws - 1 : T - 1],
        empty_buckets=tuple(empty),
    )
    for pair in pairs:
        result.pairs[(pair.bucket, pair.strategy)] = pair
    return result
