"""Input validation helpers shared by the estimators."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import ConfigError, EmptySeries, LengthMismatch, TooShort


def check_returns(X, *, min_rows=1, min_cols=1):
    """Validate a 2-D return matrix and return it as a float64 array."""
    X = check_array(
        X,
        dtype=np.float64,
        ensure_all_finite=True,
        ensure_min_samples=1,
        ensure_min_features=1,
    )
    if X.shape[0] < min_rows:
        raise TooShort(f"need at least {min_rows} rows, got {X.shape[0]}")
    if X.shape[1] < min_cols:
        raise TooShort(f"need at least {min_cols} columns, got {X.shape[1]}")
    return X


def check_series(x, *, min_length=1, name="series"):
    """Validate a 1-D finite series and return it as a float64 array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        x = x.ravel()
    if x.size == 0:
        raise EmptySeries(f"{name} is empty")
    if x.size < min_length:
        raise TooShort(f"{name} needs at least {min_length} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_paired_series(a, b, *, min_length=1):
    a = check_series(a, name="a")
    b = check_series(b, name="b")
    if a.shape != b.shape:
        raise LengthMismatch(f"series lengths differ: {a.size} vs {b.size}")
    if a.size < min_length:
        raise TooShort(f"need at least {min_length} paired observations, got {a.size}")
    return a, b


def check_positive_int(value, name, *, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_square_matrix(sigma):
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {sigma.shape}")
    if not np.all(np.isfinite(sigma)):
        raise ValueError("matrix contains non-finite values")
    return sigma
