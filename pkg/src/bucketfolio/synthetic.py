"""Synthetic one-factor datasets with a planted score/volatility relation."""

import numpy as np
import pandas as pd

from .data import CapPanel, ReturnPanel, ScoreVector

__all__ = ["make_synthetic_dataset"]


def make_synthetic_dataset(
    n_assets=100,
    n_periods=800,
    n_zero=15,
    seed=0,
    market_mean=3e-4,
    market_vol=0.008,
    idio_low=0.008,
    idio_high=0.03,
    score_vol_link=True,
    beta_range=(0.7, 1.3),
    cap_dispersion=1.0,
    start="2000-01-03",
):
    """Generate returns, scores and market caps from a one-factor model.

    ``r_it = beta_i * f_t + e_it`` with Gaussian market factor ``f`` and
    independent idiosyncratic noise. When ``score_vol_link`` is set, the
    idiosyncratic volatility falls linearly from ``idio_high`` at score 0 to
    ``idio_low`` at score 100, so higher-score buckets are less volatile.
    Otherwise volatilities are drawn independently of the scores.

    Betas are uniform on ``beta_range`` and initial caps lognormal with
    log-scale ``cap_dispersion``; both blur bucket-level variance differences,
    so narrow them when the planted volatility effect should dominate.

    Returns
    -------
    panel : ReturnPanel
    scores : ScoreVector
    caps : CapPanel
    """
    if n_zero >= n_assets:
        raise ValueError("n_zero must leave at least one positive-score asset")
    rng = np.random.default_rng(seed)
    assets = tuple(f"A{i:04d}" for i in range(n_assets))
    dates = pd.bdate_range(start, periods=n_periods)

    scores = np.zeros(n_assets)
    scores[n_zero:] = np.round(rng.uniform(1.0, 100.0, n_assets - n_zero), 2)
    rng.shuffle(scores)

    if score_vol_link:
        idio = idio_high - (idio_high - idio_low) * scores / 100.0
    else:
        idio = rng.uniform(idio_low, idio_high, n_assets)
    beta = rng.uniform(beta_range[0], beta_range[1], n_assets)
    factor = rng.normal(market_mean, market_vol, n_periods)
    noise = rng.normal(0.0, 1.0, (n_periods, n_assets)) * idio
    returns = np.clip(factor[:, None] * beta + noise, -0.5, None)

    cap0 = np.exp(rng.normal(np.log(5e9), cap_dispersion, n_assets))
    caps = cap0 * np.cumprod(1.0 + returns, axis=0)

    return (
        ReturnPanel(dates, assets, returns),
        ScoreVector(assets, scores),
        CapPanel(dates, assets, caps),
    )
