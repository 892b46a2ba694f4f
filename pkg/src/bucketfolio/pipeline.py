"""End-to-end runs: ingest, bucket, backtest, test, report.

Each stage writes its own files into ``out_dir`` so the CLI subcommands can be
chained; :func:`run_pipeline` runs them all in memory.

Output files
------------
``descriptives.csv``, ``buckets.csv``, ``bucket_summary.csv``,
``oos_ws<ws>.csv`` (out-of-sample returns), ``tests_ws<ws>.csv``,
``metrics_ws<ws>.csv``, ``wealth_ws<ws>_<strategy>.csv`` (+ ``.svg`` when
plotting), optional ``weights_ws<ws>_PT<b>_<strategy>.csv`` and
``run_manifest.json``.
"""

import dataclasses
import hashlib
import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from . import __version__
from .backtest import BacktestConfig, run_rolling_backtest
from .bucketing import assign_buckets
from .data import compute_descriptives, load_cap_panel, load_return_panel, load_scores
from .exceptions import ConfigError, MissingInput, WindowTooLong
from .inference import BootstrapParams
from .report import (
    build_result_table,
    compare_to_reference,
    emit_plot,
    wealth_frame,
    write_metrics_csv,
    write_wealth_csv,
)
from .strategies import StrategyId

log = logging.getLogger(__name__)

__all__ = ["RunConfig", "read_config", "run_pipeline", "Stages"]

DEFAULT_WINDOW_SIZES = (430, 250, 170, 84)
N_JOBS_ENV = "BUCKETFOLIO_N_JOBS"


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs. ``seed`` is mandatory."""

    returns: Path
    scores: Path
    seed: int
    caps: Path = None
    out_dir: Path = Path("results")
    k: int = 6
    window_sizes: tuple = DEFAULT_WINDOW_SIZES
    strategies: tuple = ("MV", "EW", "MC")
    annualization: int = 252
    block_length: int = 5
    resamples: int = 4999
    ridge_scale: float = 1e-8
    tol: float = 1e-8
    max_iter: int = 10_000
    allow_empty_pt1: bool = False
    name: str = None
    plot: bool = True
    dump_weights: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        for key in ("returns", "scores", "caps", "out_dir"):
            value = getattr(self, key)
            if value is not None:
                object.__setattr__(self, key, Path(value))
        try:
            strategies = tuple(StrategyId.parse(s) for s in self.strategies)
        except ValueError as exc:
            raise ConfigError(f"unknown strategy: {exc}") from exc
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "window_sizes", tuple(int(w) for w in self.window_sizes))
        if self.seed is None:
            raise ConfigError("a seed is required")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if any(w < 2 for w in self.window_sizes) or not self.window_sizes:
            raise ConfigError("window sizes must be >= 2")
        if StrategyId.MARKET_CAP_WEIGHTED in strategies and self.caps is None:
            raise ConfigError("the MC strategy needs a caps file")

    @property
    def dataset_name(self):
        return self.name or self.returns.stem

    @property
    def bootstrap(self):
        return BootstrapParams(self.block_length, self.resamples, self.seed, self.n_jobs)

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Path):
                value = str(value)
            elif f.name == "strategies":
                value = [s.value for s in value]
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


_INT_KEYS = {"seed", "k", "annualization", "block_length", "resamples", "max_iter", "n_jobs"}
_FLOAT_KEYS = {"ridge_scale", "tol"}
_BOOL_KEYS = {"allow_empty_pt1", "plot", "dump_weights"}
_LIST_KEYS = {"window_sizes", "strategies"}
_PATH_KEYS = {"returns", "scores", "caps", "out_dir"}
_KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _LIST_KEYS | _PATH_KEYS | {"name"}


def _coerce(key, value):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text not in {"1", "0", "true", "false", "yes", "no", "on", "off"}:
                raise ValueError(value)
            return text in {"1", "true", "yes", "on"}
        if key in _LIST_KEYS:
            items = value if isinstance(value, (list, tuple)) else str(value).split(",")
            items = [str(v).strip() for v in items if str(v).strip()]
            return tuple(int(v) for v in items) if key == "window_sizes" else tuple(items)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def read_config(path=None, **overrides):
    """Build a :class:`RunConfig` from a flat ``key = value`` file plus overrides.

    Blank lines and ``#`` comments are skipped. Relative paths in the file are
    resolved against the file's directory. Overrides whose value is ``None``
    are ignored; the others win over file values. The worker count may also
    come from the ``BUCKETFOLIO_N_JOBS`` environment variable.
    """
    values = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise MissingInput(f"config file not found: {path}")
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in _PATH_KEYS and not Path(value).is_absolute():
                value = str(path.parent / value)
            values[key] = value
    if N_JOBS_ENV in os.environ and "n_jobs" not in values:
        values["n_jobs"] = os.environ[N_JOBS_ENV]
    values.update({k: v for k, v in overrides.items() if v is not None})

    unknown = set(values) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("returns", "scores", "seed"):
        if key not in values:
            raise ConfigError(f"missing required config key {key!r}")
    return RunConfig(**{k: _coerce(k, v) for k, v in values.items()})


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_csv(frame, path, **kwargs):
    frame.to_csv(path, lineterminator="\n", **kwargs)
    log.info("wrote %s", path)
    return path


class Stages:
    """Pipeline stages sharing loaded inputs; each writes into ``config.out_dir``."""

    def __init__(self, config):
        self.config = config
        self.out = Path(config.out_dir)
        self.files = []
        for key in ("returns", "scores", "caps"):
            p = getattr(config, key)
            if p is not None and not p.exists():
                raise MissingInput(f"{key} file not found: {p}")
        self.panel = load_return_panel(config.returns)
        T = self.panel.n_periods
        too_long = [w for w in config.window_sizes if w >= T]
        if too_long:
            raise WindowTooLong(f"window sizes {too_long} must be smaller than T={T}")
        self.scores = load_scores(config.scores, self.panel)
        self.caps = load_cap_panel(config.caps, self.panel) if config.caps else None
        self.out.mkdir(parents=True, exist_ok=True)
        self._assignment = None

    def _emit(self, path):
        self.files.append(Path(path))
        return path

    # -- stages ------------------------------------------------------------

    def describe(self):
        desc = compute_descriptives(self.panel, self.config.annualization)
        _write_csv(desc.to_frame(self.config.dataset_name), self._emit(self.out / "descriptives.csv"),
                   index=False, float_format="%.6g")
        return desc

    @property
    def assignment(self):
        if self._assignment is None:
            self._assignment = assign_buckets(self.scores, self.config.k, self.config.allow_empty_pt1)
        return self._assignment

    def bucket(self):
        a = self.assignment
        _write_csv(a.to_frame(), self._emit(self.out / "buckets.csv"), index=False, float_format="%.17g")
        _write_csv(a.score_summary, self._emit(self.out / "bucket_summary.csv"), index=False,
                   float_format="%.6g")
        return a

    def backtest(self, window_size):
        c = self.config
        bt_config = BacktestConfig(
            window_size=window_size,
            buckets=self.assignment,
            strategies=c.strategies,
            annualization=c.annualization,
            tol=c.tol,
            max_iter=c.max_iter,
            ridge_scale=c.ridge_scale,
            n_jobs=c.n_jobs,
        )
        result = run_rolling_backtest(self.panel, self.caps, bt_config)
        if result.n_not_converged:
            log.warning("ws=%d: %d optimizer solves hit max_iter", window_size, result.n_not_converged)
        returns = result.returns_frame()
        frame = returns.copy()
        frame.index = frame.index.strftime("%Y-%m-%d")
        _write_csv(frame, self._emit(self.out / f"oos_ws{window_size}.csv"), float_format="%.17g")
        if c.dump_weights:
            for bucket, strategy in sorted(result.pairs, key=lambda p: (p[0], p[1].value)):
                wf = result.weights_frame(bucket, strategy)
                wf.index = wf.index.strftime("%Y-%m-%d")
                _write_csv(wf, self._emit(self.out / f"weights_ws{window_size}_PT{bucket}_{strategy.value}.csv"),
                           float_format="%.17g")
        return result, returns

    def load_oos(self, window_size):
        path = self.out / f"oos_ws{window_size}.csv"
        if not path.exists():
            raise MissingInput(f"{path} not found; run the backtest stage first")
        return pd.read_csv(path, index_col="date", parse_dates=["date"], float_precision="round_trip")

    def test(self, window_size, returns=None):
        returns = self.load_oos(window_size) if returns is None else returns
        tests = compare_to_reference(returns, self.config.strategies, self.assignment.bucket_ids,
                                     self.config.bootstrap)
        _write_csv(tests, self._emit(self.out / f"tests_ws{window_size}.csv"), index=False,
                   float_format="%.17g")
        return tests

    def load_tests(self, window_size):
        path = self.out / f"tests_ws{window_size}.csv"
        if not path.exists():
            raise MissingInput(f"{path} not found; run the test stage first")
        return pd.read_csv(path, keep_default_na=False, na_values={"statistic": [""], "p_value": [""]})

    def report(self, window_size, returns=None, tests=None):
        c = self.config
        returns = self.load_oos(window_size) if returns is None else returns
        tests = self.load_tests(window_size) if tests is None else tests
        sizes = {b: len(self.assignment.buckets[b]) for b in self.assignment.bucket_ids}
        table = build_result_table(returns, tests, c.strategies, sizes, c.annualization)
        write_metrics_csv(table, self._emit(self.out / f"metrics_ws{window_size}.csv"))

        start = self.panel.dates[window_size - 1]
        wealth_paths = []
        for strategy in c.strategies:
            frame = wealth_frame(returns, strategy, self.assignment.bucket_ids, start)
            path = self.out / f"wealth_ws{window_size}_{strategy.value}.csv"
            write_wealth_csv(frame, path)
            wealth_paths.append(self._emit(path))
        if c.plot:
            for svg in emit_plot(wealth_paths):
                self._emit(svg)
        return table

    def manifest(self, extra=None):
        inputs = {key: getattr(self.config, key) for key in ("returns", "scores", "caps")}
        manifest = {
            "package_version": __version__,
            "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": self.config.to_dict(),
            "inputs": {
                key: {"path": str(p), "sha256": _sha256(p)} for key, p in inputs.items() if p is not None
            },
            "outputs": sorted(str(p.name) for p in self.files),
        }
        if extra:
            manifest.update(extra)
        path = self.out / "run_manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.files.append(path)
        return path


def run_pipeline(config):
    """Run every stage for every window size.

    Returns
    -------
    list of pathlib.Path
        All files written, in order, ending with ``run_manifest.json``.
    """
    stages = Stages(config)
    stages.describe()
    stages.bucket()
    not_converged = {}
    for ws in config.window_sizes:
        result, returns = stages.backtest(ws)
        not_converged[str(ws)] = result.n_not_converged
        tests = stages.test(ws, returns)
        stages.report(ws, returns, tests)
    stages.manifest({"optimizer_max_iter_days": not_converged})
    return list(stages.files)
