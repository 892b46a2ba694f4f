"""Result tables, wealth curves and plots.

The metrics table has one row per (strategy, bucket). Buckets 2..k+1 carry
significance stars from variance and Sharpe tests against bucket 1; per
strategy block one row is flagged as lowest annualized variance and one as
highest Sharpe ratio (ties go to the lowest bucket id).
"""

import logging
import warnings
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import EmptyBucketWarning, MissingInput
from .inference import BootstrapParams, sharpe_diff_test, variance_diff_test
from .metrics import performance_report, wealth_curve
from .strategies import StrategyId

log = logging.getLogger(__name__)

__all__ = [
    "METRIC_COLUMNS",
    "compare_to_reference",
    "build_result_table",
    "write_metrics_csv",
    "wealth_frame",
    "write_wealth_csv",
    "plot_wealth",
    "emit_plot",
]

METRIC_COLUMNS = [
    "strategy",
    "bucket",
    "n_assets",
    "M",
    "variance_annualized",
    "variance_stars",
    "mean_annualized",
    "sharpe_daily",
    "sharpe_stars",
    "var95",
    "variance_p_value",
    "sharpe_p_value",
    "is_min_variance",
    "is_max_sharpe",
]
TEST_COLUMNS = ["strategy", "bucket", "kind", "statistic", "p_value", "stars"]
FLOAT_FORMAT = "%.6g"


def _column(strategy, bucket):
    return f"{StrategyId.parse(strategy).value}_PT{bucket}"


def compare_to_reference(returns, strategies, bucket_ids, params=None, reference=1):
    """Variance and Sharpe tests of every bucket against the reference bucket.

    Parameters
    ----------
    returns : pandas.DataFrame
        Out-of-sample returns with ``<strategy>_PT<bucket>`` columns.
    strategies : iterable of StrategyId or str
    bucket_ids : iterable of int
    params : BootstrapParams, optional

    Returns
    -------
    pandas.DataFrame
        Columns ``strategy, bucket, kind, statistic, p_value, stars``; empty
        when the reference bucket has no returns.
    """
    params = params or BootstrapParams()
    rows = []
    for strategy in strategies:
        strategy = StrategyId.parse(strategy)
        ref = _column(strategy, reference)
        if ref not in returns:
            continue
        for bucket in bucket_ids:
            col = _column(strategy, bucket)
            if bucket == reference or col not in returns:
                continue
            for test in (variance_diff_test, sharpe_diff_test):
                res = test(returns[col].to_numpy(), returns[ref].to_numpy(), params)
                rows.append((strategy.value, bucket, res.kind.value, res.statistic, res.p_value, res.stars))
    return pd.DataFrame(rows, columns=TEST_COLUMNS)


def build_result_table(returns, tests, strategies, bucket_sizes, annualization=252):
    """Assemble the per-(strategy, bucket) metrics table.

    Parameters
    ----------
    returns : pandas.DataFrame
        Out-of-sample returns with ``<strategy>_PT<bucket>`` columns.
    tests : pandas.DataFrame
        Output of :func:`compare_to_reference`.
    strategies : iterable of StrategyId or str
    bucket_sizes : dict of int -> int
        Number of assets per bucket id; empty buckets yield blank rows.
    annualization : int, default=252
    """
    rows = []
    for strategy in strategies:
        strategy = StrategyId.parse(strategy)
        for bucket in sorted(bucket_sizes):
            row = dict.fromkeys(METRIC_COLUMNS, np.nan)
            row.update(strategy=strategy.value, bucket=bucket, n_assets=bucket_sizes[bucket],
                       variance_stars="", sharpe_stars="", is_min_variance=False, is_max_sharpe=False)
            col = _column(strategy, bucket)
            if col in returns:
                rep = performance_report(returns[col].to_numpy(), annualization)
                row.update(M=rep.M, variance_annualized=rep.variance_annualized,
                           mean_annualized=rep.mean_annualized, sharpe_daily=rep.sharpe_daily,
                           var95=rep.var95)
            for kind, prefix in (("VarianceDiff", "variance"), ("SharpeDiff", "sharpe")):
                hit = tests[(tests.strategy == strategy.value) & (tests.bucket == bucket) & (tests.kind == kind)]
                if len(hit):
                    row[f"{prefix}_p_value"] = float(hit.p_value.iloc[0])
                    row[f"{prefix}_stars"] = hit.stars.iloc[0] if isinstance(hit.stars.iloc[0], str) else ""
            rows.append(row)

    table = pd.DataFrame(rows, columns=METRIC_COLUMNS)
    for strategy, block in table.groupby("strategy", sort=False):
        var = block.variance_annualized
        if var.notna().any():
            table.loc[var.idxmin(), "is_min_variance"] = True
        sr = block.sharpe_daily
        if sr.notna().any():
            table.loc[sr.idxmax(), "is_max_sharpe"] = True
    table["M"] = table["M"].astype("Int64")
    return table


def write_metrics_csv(table, path):
    """Write a metrics table with 6 significant digits."""
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def wealth_frame(returns, strategy, bucket_ids, start_date):
    """Wealth curves of one strategy, ``M + 1`` rows starting at 1.0.

    Buckets without returns appear as empty columns.
    """
    strategy = StrategyId.parse(strategy)
    index = pd.DatetimeIndex([pd.Timestamp(start_date)]).append(pd.DatetimeIndex(returns.index))
    frame = pd.DataFrame(index=index)
    for bucket in bucket_ids:
        col = _column(strategy, bucket)
        if col in returns:
            frame[f"PT{bucket}"] = np.concatenate([[1.0], wealth_curve(returns[col].to_numpy())])
        else:
            frame[f"PT{bucket}"] = np.nan
    frame.index.name = "date"
    return frame


def write_wealth_csv(frame, path):
    out = frame.copy()
    out.index = out.index.strftime("%Y-%m-%d")
    out.to_csv(path, float_format=FLOAT_FORMAT, lineterminator="\n")


def plot_wealth(frame, ax=None, title=None):
    """Draw one polyline per non-empty bucket column; returns the axes."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    if ax is None:
        _, ax = plt.subplots(figsize=(8, 4.5))
    for col in frame.columns:
        series = frame[col]
        if series.isna().all():
            warnings.warn(f"bucket {col} is empty and left out of the plot", EmptyBucketWarning, stacklevel=2)
            continue
        ax.plot(series.index, series.to_numpy(), label=col, linewidth=0.9)
    ax.set_ylabel("wealth")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize="small", ncol=2)
    return ax


def emit_plot(wealth_paths, out_dir=None):
    """Render each wealth CSV to an SVG line chart next to it (or in ``out_dir``).

    Returns
    -------
    list of pathlib.Path
        The written SVG files.
    """
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    written = []
    for path in map(Path, wealth_paths):
        if not path.exists():
            raise MissingInput(f"wealth file not found: {path}")
        frame = pd.read_csv(path, index_col="date", parse_dates=["date"])
        fig, ax = plt.subplots(figsize=(8, 4.5))
        plot_wealth(frame, ax, title=path.stem)
        fig.autofmt_xdate()
        target = (Path(out_dir) if out_dir else path.parent) / f"{path.stem}.svg"
        # fixed hash salt and no date metadata keep the SVG reproducible
        with matplotlib.rc_context({"svg.hashsalt": "bucketfolio"}):
            fig.savefig(target, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(target)
    return written
