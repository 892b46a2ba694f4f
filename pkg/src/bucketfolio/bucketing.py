"""Score buckets: a zero-score bucket plus ``k`` equal-probability groups.

Bucket 1 holds every asset whose score is exactly zero. The remaining ``m``
assets are ranked by ascending score (ties broken by ascending identifier) and
the asset of 0-based rank ``r`` goes to bucket ``2 + floor(r * k / m)``. Rank
cuts rather than interpolated quantiles keep group sizes balanced and make the
assignment invariant to any increasing transform of the scores.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, ClusterMixin

from .data import ScoreVector
from .exceptions import EmptyUniverse, ScoreOutOfRange, TooFewAssets
from .validation import check_positive_int

__all__ = ["BucketAssignment", "ScoreBucketer", "assign_buckets", "bucket_sizes"]


@dataclass(frozen=True)
class BucketAssignment:
    """Partition of the asset universe into buckets 1..k+1.

    Attributes
    ----------
    buckets : dict of int -> tuple of str
        Bucket id (1-based) to member assets, members sorted by (score, id).
    cut_points : ndarray of shape (k - 1,)
        Score of the first (lowest-ranked) asset entering buckets 3..k+1.
    score_summary : pandas.DataFrame
        Per-bucket ``n_assets``, ``min``, ``mean`` and ``max`` score.
    scores : pandas.Series
        The scores the assignment was built from, indexed by asset.
    """

    buckets: dict
    cut_points: np.ndarray
    score_summary: pd.DataFrame
    scores: pd.Series

    @property
    def n_buckets(self):
        return len(self.buckets)

    @property
    def bucket_ids(self):
        return sorted(self.buckets)

    def labels(self):
        """Bucket id per asset, in the order of ``scores``."""
        lookup = {a: b for b, members in self.buckets.items() for a in members}
        return pd.Series([lookup[a] for a in self.scores.index], index=self.scores.index, name="bucket_id")

    def to_frame(self):
        rows = [
            (b, a, float(self.scores[a])) for b in self.bucket_ids for a in self.buckets[b]
        ]
        return pd.DataFrame(rows, columns=["bucket_id", "asset_id", "score"])


def _as_series(scores):
    if isinstance(scores, ScoreVector):
        return scores.to_series()
    if isinstance(scores, pd.Series):
        return scores.astype(float)
    if isinstance(scores, dict):
        return pd.Series(scores, dtype=float)
    raise TypeError(f"scores must be a ScoreVector, Series or dict, got {type(scores).__name__}")


def assign_buckets(scores, k=6, allow_empty_pt1=False):
    """Partition assets into the zero-score bucket and ``k`` rank groups.

    Parameters
    ----------
    scores : ScoreVector, pandas.Series or dict
        Score per asset.
    k : int, default=6
        Number of groups for the strictly positive scores.
    allow_empty_pt1 : bool, default=False
        Accept universes without any zero score (bucket 1 is then empty).

    Returns
    -------
    BucketAssignment
    """
    k = check_positive_int(k, "k")
    series = _as_series(scores)
    if series.empty:
        raise EmptyUniverse("no assets to bucket")
    series.index = series.index.map(str)
    bad = ~np.isfinite(series.to_numpy()) | (series < 0).to_numpy() | (series > 100).to_numpy()
    if bad.any():
        raise ScoreOutOfRange(f"score of {series.index[bad][0]!r} outside [0, 100]")

    zero = sorted(series.index[series == 0])
    if not zero and not allow_empty_pt1:
        raise EmptyUniverse("no zero-score assets; pass allow_empty_pt1=True to accept an empty PT1")

    positive = series[series > 0]
    m = len(positive)
    if m < k:
        raise TooFewAssets(f"{m} positive-score assets cannot fill {k} buckets")

    pos_ids = positive.index.to_numpy(dtype=object)
    pos_scores = positive.to_numpy()
    perm = np.lexsort((pos_ids.astype(str), pos_scores))
    order = pos_ids[perm]
    groups = 2 + (np.arange(m) * k) // m

    buckets = {1: tuple(zero)}
    for b in range(2, k + 2):
        buckets[b] = tuple(order[groups == b])

    first_rank = [-(-j * m // k) for j in range(1, k)]
    cut_points = pos_scores[perm][first_rank].astype(float)

    summary = pd.DataFrame(
        [
            {
                "bucket_id": b,
                "n_assets": len(members),
                "min": series[list(members)].min() if members else np.nan,
                "mean": series[list(members)].mean() if members else np.nan,
                "max": series[list(members)].max() if members else np.nan,
            }
            for b, members in buckets.items()
        ]
    )
    return BucketAssignment(buckets, cut_points, summary, series)


def bucket_sizes(assignment):
    """Asset count per bucket, ordered by bucket id."""
    return [len(assignment.buckets[b]) for b in assignment.bucket_ids]


class ScoreBucketer(ClusterMixin, BaseEstimator):
    """Estimator wrapper around :func:`assign_buckets`.

    Parameters
    ----------
    n_buckets : int, default=6
        Number of positive-score groups; the fitted partition has
        ``n_buckets + 1`` buckets.
    allow_empty_pt1 : bool, default=False

    Attributes
    ----------
    assignment_ : BucketAssignment
    labels_ : pandas.Series
        Bucket id per asset, in input order.
    """

    def __init__(self, n_buckets=6, allow_empty_pt1=False):
        self.n_buckets = n_buckets
        self.allow_empty_pt1 = allow_empty_pt1

    def fit(self, X, y=None):
        """Fit on a score vector (ScoreVector, Series or dict)."""
        self.assignment_ = assign_buckets(X, self.n_buckets, self.allow_empty_pt1)
        self.labels_ = self.assignment_.labels()
        return self
