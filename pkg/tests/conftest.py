import numpy as np
import pandas as pd
import pytest

from bucketfolio.data import CapPanel, ReturnPanel
from bucketfolio.synthetic import make_synthetic_dataset

# acceptance criteria register (number, passed, detail) here for the summary
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture(scope="session")
def small_dataset():
    return make_synthetic_dataset(n_assets=40, n_periods=260, n_zero=5, seed=3)


def make_panel(values, start="2020-01-01", assets=None):
    values = np.asarray(values, dtype=float)
    dates = pd.bdate_range(start, periods=values.shape[0])
    assets = assets or tuple(f"X{i}" for i in range(values.shape[1]))
    return ReturnPanel(dates, assets, values)


def make_caps(panel, values=None):
    values = np.ones(panel.shape) if values is None else values
    return CapPanel(panel.dates, panel.assets, values)
