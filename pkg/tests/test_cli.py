import json

import pandas as pd
import pytest

from bucketfolio.cli import main
from bucketfolio.pipeline import read_config


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out-dir", str(root), "--n-assets", "100", "--n-periods", "800", "--seed", "4"]) == 0
    return root


def run(dataset, out, *extra):
    return main(["all", "--config", str(dataset / "run.cfg"), "--out-dir", str(out), "--resamples", "199",
                 "--no-plot", *extra])


def test_full_run_outputs(dataset, tmp_path):
    assert run(dataset, tmp_path, "--ws", "170") == 0
    metrics = pd.read_csv(tmp_path / "metrics_ws170.csv")
    assert len(metrics) == 21
    assert set(metrics.strategy) == {"MV", "EW", "MC"}
    assert (metrics.M == 630).all()
    wealth = pd.read_csv(tmp_path / "wealth_ws170_MV.csv")
    assert len(wealth) == 631 and list(wealth.columns) == ["date"] + [f"PT{b}" for b in range(1, 8)]
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert "metrics_ws170.csv" in json.dumps(manifest)


def test_byte_identical_reruns(dataset, tmp_path):
    assert run(dataset, tmp_path / "a", "--ws", "300", "--strategy", "EW,MC") == 0
    assert run(dataset, tmp_path / "b", "--ws", "300", "--strategy", "EW,MC") == 0
    for name in ("metrics_ws300.csv", "wealth_ws300_EW.csv", "tests_ws300.csv", "oos_ws300.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_stages_chain(dataset, tmp_path):
    common = ["--config", str(dataset / "run.cfg"), "--out-dir", str(tmp_path), "--ws", "400",
              "--strategy", "EW", "--resamples", "99", "--no-plot"]
    for stage in ("describe", "bucket", "backtest", "test", "report"):
        assert main([stage, *common]) == 0
    assert (tmp_path / "descriptives.csv").exists()
    assert (tmp_path / "buckets.csv").exists()
    assert len(pd.read_csv(tmp_path / "metrics_ws400.csv")) == 7


def test_weights_dump(dataset, tmp_path):
    assert run(dataset, tmp_path, "--ws", "700", "--strategy", "MC", "--dump-weights") == 0
    w = pd.read_csv(tmp_path / "weights_ws700_PT2_MC.csv", index_col=0)
    assert len(w) == 100
    assert (w.sum(axis=1) - 1).abs().max() < 1e-12


def test_window_too_long_exit_code(dataset, tmp_path, capsys):
    assert run(dataset, tmp_path, "--ws", "800") == 2
    assert "800" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["all", "--returns", str(tmp_path / "none.csv"), "--scores", str(tmp_path / "s.csv"),
                 "--seed", "1", "--out-dir", str(tmp_path)]) == 2


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("returns = r.csv\nscores = s.csv\nseed = 1\nbogus = 3\n")
    assert main(["describe", "--config", str(cfg)]) == 2


def test_data_error_exit_code(dataset, tmp_path):
    text = (dataset / "returns.csv").read_text().splitlines()
    row = text[5].split(",")
    row[3] = ""
    text[5] = ",".join(row)
    (tmp_path / "returns.csv").write_text("\n".join(text) + "\n")
    args = ["describe", "--returns", str(tmp_path / "returns.csv"), "--scores", str(dataset / "scores.csv"),
            "--seed", "1", "--strategy", "EW", "--out-dir", str(tmp_path / "out")]
    assert main(args) == 3


def test_numerical_error_exit_code(tmp_path):
    dates = pd.bdate_range("2020-01-01", periods=40).strftime("%Y-%m-%d")
    frame = pd.DataFrame({"date": dates, "A": 0.0, "B": 0.0, "C": 0.0})
    frame.to_csv(tmp_path / "r.csv", index=False)
    (tmp_path / "s.csv").write_text("asset_id,score\nA,0\nB,10\nC,20\n")
    args = ["backtest", "--returns", str(tmp_path / "r.csv"), "--scores", str(tmp_path / "s.csv"),
            "--seed", "1", "--ws", "10", "--k", "1", "--strategy", "MV", "--out-dir", str(tmp_path / "o")]
    assert main(args) == 4


def test_config_overrides(dataset):
    cfg = read_config(dataset / "run.cfg", seed=9, window_sizes=(84, 170))
    assert cfg.seed == 9 and cfg.window_sizes == (84, 170)
    assert cfg.returns == dataset / "returns.csv"
