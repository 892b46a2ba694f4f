"""Loading, validation and summary statistics for the input panels.

Three CSV inputs are supported:

* ``returns.csv`` / ``caps.csv``: header ``date,<asset1>,<asset2>,...`` with
  ISO-8601 dates and one decimal cell per (date, asset).
* ``scores.csv``: header ``asset_id,score``.

Panels must be complete. Missing cells are rejected, never imputed.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from .exceptions import (
    DataError,
    DuplicateDate,
    MissingCell,
    NonMonotonicDates,
    NonPositiveCap,
    PanelMismatch,
    ScoreOutOfRange,
    TooFewAssets,
    TooShort,
    UnknownAssetWarning,
    UnscoredAsset,
)

log = logging.getLogger(__name__)

__all__ = [
    "ReturnPanel",
    "CapPanel",
    "ScoreVector",
    "PanelDescriptives",
    "load_return_panel",
    "load_cap_panel",
    "load_scores",
    "write_panel",
    "write_scores",
    "compute_descriptives",
]

DEFAULT_ANNUALIZATION = 252


@dataclass(frozen=True)
class ReturnPanel:
    """T x N matrix of daily simple returns.

    Attributes
    ----------
    dates : pandas.DatetimeIndex
        Strictly increasing observation dates.
    assets : tuple of str
        Asset identifiers, one per column.
    values : ndarray of shape (T, N)
        Finite simple returns, 0.01 meaning +1%.
    """

    dates: pd.DatetimeIndex
    assets: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        dates = pd.DatetimeIndex(self.dates)
        assets = tuple(str(a) for a in self.assets)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "assets", assets)
        _check_panel_shape(dates, assets, values)
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise MissingCell(str(dates[row].date()), assets[col])

    @classmethod
    def from_frame(cls, frame):
        return cls(frame.index, tuple(frame.columns), frame.to_numpy(dtype=np.float64))

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_periods(self):
        return self.values.shape[0]

    @property
    def n_assets(self):
        return self.values.shape[1]

    def to_frame(self):
        frame = pd.DataFrame(self.values, index=self.dates, columns=list(self.assets))
        frame.index.name = "date"
        return frame

    def select(self, assets):
        """Return the sub-panel restricted to ``assets`` (in the given order)."""
        idx = [self.assets.index(a) for a in assets]
        return self.values[:, idx]


@dataclass(frozen=True)
class CapPanel(ReturnPanel):
    """Market capitalizations aligned with a :class:`ReturnPanel`."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values <= 0):
            row, col = np.argwhere(self.values <= 0)[0]
            raise NonPositiveCap(
                f"non-positive market cap at {self.dates[row].date()}, asset {self.assets[col]!r}"
            )

    def check_aligned(self, panel):
        if not self.dates.equals(panel.dates):
            raise PanelMismatch("cap panel dates differ from the return panel")
        if self.assets != panel.assets:
            raise PanelMismatch("cap panel assets differ from the return panel")
        return self


@dataclass(frozen=True)
class ScoreVector:
    """One score in [0, 100] per asset; zero marks the zero-score bucket."""

    assets: tuple
    scores: np.ndarray

    def __post_init__(self):
        assets = tuple(str(a) for a in self.assets)
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "scores", scores)
        if scores.shape != (len(assets),):
            raise DataError("scores and assets differ in length")
        if len(set(assets)) != len(assets):
            raise DataError("duplicate asset identifiers in scores")
        bad = ~np.isfinite(scores) | (scores < 0) | (scores > 100)
        if bad.any():
            i = int(np.argmax(bad))
            raise ScoreOutOfRange(f"score of {assets[i]!r} is {scores[i]!r}, expected [0, 100]")

    @classmethod
    def from_mapping(cls, mapping):
        return cls(tuple(mapping), np.array(list(mapping.values()), dtype=float))

    def to_series(self):
        return pd.Series(self.scores, index=pd.Index(self.assets, name="asset_id"), name="score")

    def __len__(self):
        return len(self.assets)


@dataclass(frozen=True)
class PanelDescriptives:
    """Cross-asset averages of per-asset return statistics.

    Skewness and excess kurtosis are averaged over assets with non-zero
    variance only; ``n_undefined`` counts the excluded assets.
    """

    n_periods: int
    n_assets: int
    mean_annualized: float
    std_annualized: float
    skewness: float
    excess_kurtosis: float
    annualization: int = DEFAULT_ANNUALIZATION
    n_undefined: int = 0
    per_asset: pd.DataFrame = field(default=None, repr=False, compare=False)

    def to_frame(self, name="dataset"):
        return pd.DataFrame(
            {
                "dataset": [name],
                "T": [self.n_periods],
                "N": [self.n_assets],
                "mean_annualized": [self.mean_annualized],
                "std_annualized": [self.std_annualized],
                "skewness": [self.skewness],
                "excess_kurtosis": [self.excess_kurtosis],
                "annualization": [self.annualization],
            }
        )


def _check_panel_shape(dates, assets, values):
    if values.ndim != 2:
        raise DataError(f"panel values must be 2-D, got shape {values.shape}")
    if values.shape != (len(dates), len(assets)):
        raise DataError(
            f"panel shape {values.shape} does not match {len(dates)} dates x {len(assets)} assets"
        )
    if len(set(assets)) != len(assets):
        raise DataError("duplicate asset identifiers in panel header")
    if len(assets) < 2:
        raise TooFewAssets(f"need at least 2 assets, got {len(assets)}")
    if len(dates) < 2:
        raise TooShort(f"need at least 2 dates, got {len(dates)}")
    if dates.has_duplicates:
        dup = dates[dates.duplicated()][0]
        raise DuplicateDate(f"duplicate date {dup.date()}")
    if not dates.is_monotonic_increasing:
        pos = int(np.argmax(np.diff(dates.asi8) < 0)) + 1
        raise NonMonotonicDates(
            f"date {dates[pos].date()} (row {pos + 1}) precedes {dates[pos - 1].date()}"
        )


def _parse_floats(text):
    """Correctly rounded decimal parse; unparseable cells become NaN."""
    try:
        return text.astype(np.float64)
    except ValueError:
        out = np.empty(text.shape)
        for idx, cell in np.ndenumerate(text):
            try:
                out[idx] = float(cell)
            except ValueError:
                out[idx] = np.nan
        return out


def _read_panel_frame(path):
    path = Path(path)
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    if len(raw.columns) == 0 or raw.columns[0].strip() != "date":
        raise DataError(f"{path}: first column header must be 'date'")
    raw.columns = [c.strip() for c in raw.columns]
    assets = list(raw.columns[1:])

    date_text = raw.iloc[:, 0].str.strip()
    dates = pd.to_datetime(date_text, format="ISO8601", errors="coerce")
    if dates.isna().any():
        i = int(np.argmax(dates.isna().to_numpy()))
        raise MissingCell(i + 1, "date", date_text.iloc[i])

    cells = raw.iloc[:, 1:].apply(lambda col: col.str.strip())
    values = _parse_floats(cells.to_numpy(dtype=str))
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise MissingCell(date_text.iloc[row], assets[col], cells.iat[row, col])
    return pd.DatetimeIndex(dates), tuple(assets), values


def load_return_panel(path):
    """Load and validate a ``date,<asset...>`` return CSV.

    Raises
    ------
    MissingCell, DuplicateDate, NonMonotonicDates, TooFewAssets
    """
    dates, assets, values = _read_panel_frame(path)
    panel = ReturnPanel(dates, assets, values)
    log.info("loaded return panel %s: T=%d N=%d", path, *panel.shape)
    return panel


def load_cap_panel(path, panel=None):
    """Load market caps; when ``panel`` is given, require identical dates/assets."""
    dates, assets, values = _read_panel_frame(path)
    caps = CapPanel(dates, assets, values)
    if panel is not None:
        caps.check_aligned(panel)
    return caps


def load_scores(path, panel):
    """Load an ``asset_id,score`` CSV covering exactly the panel's assets.

    Assets in the file but not in the panel are ignored with an
    :class:`UnknownAssetWarning`. The result is ordered like ``panel.assets``.
    """
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    raw.columns = [c.strip() for c in raw.columns]
    if list(raw.columns[:2]) != ["asset_id", "score"]:
        raise DataError(f"{path}: header must be 'asset_id,score'")
    ids = raw["asset_id"].str.strip()
    if ids.duplicated().any():
        raise DataError(f"{path}: duplicate asset_id {ids[ids.duplicated()].iloc[0]!r}")
    values = _parse_floats(raw["score"].str.strip().to_numpy(dtype=str))
    if np.isnan(values).any():
        i = int(np.argmax(np.isnan(values)))
        raise MissingCell(i + 1, "score", raw["score"].iloc[i])
    mapping = dict(zip(ids, values))

    missing = [a for a in panel.assets if a not in mapping]
    if missing:
        raise UnscoredAsset(missing)
    unknown = sorted(set(mapping) - set(panel.assets))
    if unknown:
        warnings.warn(
            f"ignoring {len(unknown)} scored assets absent from the panel: {unknown[:5]}",
            UnknownAssetWarning,
            stacklevel=2,
        )
    return ScoreVector(panel.assets, np.array([mapping[a] for a in panel.assets]))


def write_panel(panel, path):
    """Write a panel as ``date,<asset...>`` CSV; values round-trip exactly."""
    frame = panel.to_frame()
    frame.index = frame.index.strftime("%Y-%m-%d")
    frame.to_csv(path, float_format="%.17g", lineterminator="\n")


def write_scores(scores, path):
    scores.to_series().to_csv(path, float_format="%.17g", lineterminator="\n")


def compute_descriptives(panel, annualization=DEFAULT_ANNUALIZATION):
    """Average per-asset return statistics across the panel.

    Per asset: sample mean times ``annualization``, sample standard deviation
    (ddof=1) times ``sqrt(annualization)``, moment skewness ``m3 / m2**1.5``
    and excess kurtosis ``m4 / m2**2 - 3``. Assets with zero variance have
    undefined higher moments and are left out of those two averages.

    Parameters
    ----------
    panel : ReturnPanel or array-like of shape (T, N)
    annualization : int, default=252

    Returns
    -------
    PanelDescriptives
    """
    values = panel.values if isinstance(panel, ReturnPanel) else np.asarray(panel, float)
    if values.ndim == 1:
        values = values[:, None]
    T, N = values.shape
    if T < 4:
        raise TooShort(f"descriptives need T >= 4, got {T}")
    if annualization < 1:
        raise ValueError("annualization must be a positive integer")

    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1)
    defined = np.ptp(values, axis=0) > 0
    skew = np.full(N, np.nan)
    kurt = np.full(N, np.nan)
    if defined.any():
        skew[defined] = stats.skew(values[:, defined], axis=0, bias=True)
        kurt[defined] = stats.kurtosis(values[:, defined], axis=0, fisher=True, bias=True)

    per_asset = pd.DataFrame(
        {
            "mean_annualized": mean * annualization,
            "std_annualized": std * np.sqrt(annualization),
            "skewness": skew,
            "excess_kurtosis": kurt,
        },
        index=list(panel.assets) if isinstance(panel, ReturnPanel) else None,
    )
    n_defined = int(defined.sum())
    return PanelDescriptives(
        n_periods=T,
        n_assets=N,
        mean_annualized=float(per_asset["mean_annualized"].mean()),
        std_annualized=float(per_asset["std_annualized"].mean()),
        skewness=float(np.mean(skew[defined])) if n_defined else float("nan"),
        excess_kurtosis=float(np.mean(kurt[defined])) if n_defined else float("nan"),
        annualization=int(annualization),
        n_undefined=N - n_defined,
        per_asset=per_asset,
    )
