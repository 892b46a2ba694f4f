"""Command-line front end.

Usage::

    bucketfolio all --config run.cfg [--ws 170] [--seed 7] [--out-dir out] [--strategy EW]
    bucketfolio describe|bucket|backtest|test|report --config run.cfg
    bucketfolio synth --out-dir data --n-assets 100 --n-periods 800

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path

from .data import write_panel, write_scores
from .exceptions import BucketfolioError, ConfigError
from .pipeline import Stages, read_config, run_pipeline
from .synthetic import make_synthetic_dataset

log = logging.getLogger("bucketfolio")

STAGES = ("describe", "bucket", "backtest", "test", "report", "all")


def _window_sizes(values):
    if not values:
        return None
    out = []
    for v in values:
        out.extend(int(x) for x in v.split(",") if x.strip())
    return tuple(out)


def _strategies(values):
    if not values:
        return None
    out = []
    for v in values:
        out.extend(x.strip() for x in v.split(",") if x.strip())
    return tuple(out)


def _add_run_options(p):
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--returns", type=Path)
    p.add_argument("--scores", type=Path)
    p.add_argument("--caps", type=Path)
    p.add_argument("--ws", action="append", metavar="N[,N...]", help="window size(s); repeatable")
    p.add_argument("--strategy", action="append", metavar="MV|EW|MC", help="strategy; repeatable")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--k", type=int, help="number of positive-score buckets")
    p.add_argument("--resamples", type=int, help="bootstrap resamples")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--dump-weights", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="bucketfolio", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        _add_run_options(sub.add_parser(name, help=f"run the {name} stage" if name != "all" else "run every stage"))

    synth = sub.add_parser("synth", help="write a synthetic returns/scores/caps dataset and config")
    synth.add_argument("--out-dir", type=Path, required=True)
    synth.add_argument("--n-assets", type=int, default=100)
    synth.add_argument("--n-periods", type=int, default=800)
    synth.add_argument("--n-zero", type=int, default=15)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--no-score-link", action="store_true",
                       help="draw volatilities independently of scores")
    return parser


def _config_from_args(args):
    return read_config(
        args.config,
        returns=args.returns,
        scores=args.scores,
        caps=args.caps,
        window_sizes=_window_sizes(args.ws),
        strategies=_strategies(args.strategy),
        seed=args.seed,
        out_dir=args.out_dir,
        k=args.k,
        resamples=args.resamples,
        plot=False if args.no_plot else None,
        dump_weights=True if args.dump_weights else None,
    )


def _run_synth(args):
    panel, scores, caps = make_synthetic_dataset(
        n_assets=args.n_assets,
        n_periods=args.n_periods,
        n_zero=args.n_zero,
        seed=args.seed,
        score_vol_link=not args.no_score_link,
    )
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_panel(panel, out / "returns.csv")
    write_panel(caps, out / "caps.csv")
    write_scores(scores, out / "scores.csv")
    ws = max(2, min(170, panel.n_periods // 4))
    (out / "run.cfg").write_text(
        "returns = returns.csv\n"
        "scores = scores.csv\n"
        "caps = caps.csv\n"
        f"window_sizes = {ws}\n"
        "strategies = MV,EW,MC\n"
        "k = 6\n"
        f"seed = {args.seed}\n"
        "out_dir = results\n",
        encoding="utf-8",
    )
    print(f"wrote synthetic dataset to {out}")


def _run_stage(command, config):
    if command == "all":
        files = run_pipeline(config)
        print(f"wrote {len(files)} files to {config.out_dir}")
        return
    stages = Stages(config)
    if command == "describe":
        desc = stages.describe()
        print(desc.to_frame(config.dataset_name).to_string(index=False))
    elif command == "bucket":
        print(stages.bucket().score_summary.to_string(index=False))
    else:
        for ws in config.window_sizes:
            if command == "backtest":
                result, _ = stages.backtest(ws)
                print(f"ws={ws}: M={result.M} out-of-sample days, {len(result.pairs)} portfolios")
            elif command == "test":
                tests = stages.test(ws)
                print(f"ws={ws}: {len(tests)} tests")
            elif command == "report":
                table = stages.report(ws)
                print(f"ws={ws}")
                print(table.to_string(index=False, float_format=lambda x: f"{x:.4g}"))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            _run_synth(args)
        else:
            _run_stage(args.command, _config_from_args(args))
    except BucketfolioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
