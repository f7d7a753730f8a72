"""Run-directory files and the figures drawn from them."""
import json

import numpy as np
import pandas as pd
import pytest

from modules.simulator import PauliZObservable
from modules.training import HIST_BINS, EstimatorConfig, EstimatorKind, TrainConfig, train
from utils.chart_tooltips import CHARTS, chart_columns, get_chart_tooltip
from utils.figures import (
    create_convergence_chart,
    create_cost_chart,
    create_error_cdf_chart,
    create_histogram_chart,
    create_toy_path_chart,
    render_run,
)
from utils.reporting import read_run, write_csv, write_json, write_run


@pytest.fixture(scope="module")
def report(friedman_circuit, small_friedman):
    cfg = TrainConfig(estimator=EstimatorConfig(kind=EstimatorKind.SPSA, k=5), epochs=3, batch_size=10,
                      histogram_epochs=(0, 2))
    return train(cfg, small_friedman, friedman_circuit, [PauliZObservable.full(5)])


@pytest.fixture
def run_dir(tmp_path, report):
    write_run(tmp_path / "run", report, {"name": "unit"}, {"batch_size": 10})
    return tmp_path / "run"


def test_write_run_files(run_dir, report):
    files = read_run(run_dir)
    assert set(files) == {"epoch_metrics.csv", "summary.json", "histogram_epoch_0.csv",
                          "histogram_epoch_2.csv", "test_error_cdf.csv"}
    assert len(files["histogram_epoch_2.csv"]) == HIST_BINS + 2
    summary = files["summary.json"]
    assert summary["config"] == {"name": "unit"}
    assert summary["batch_size"] == 10
    assert summary["counters"]["grad_evals"] == report.grad_evals


def test_metrics_keep_full_precision(run_dir, report):
    metrics = pd.read_csv(run_dir / "epoch_metrics.csv", float_precision="round_trip")
    np.testing.assert_array_equal(metrics["train_loss"].to_numpy(), [r.train_loss for r in report.records])


def test_write_json_converts_numpy(tmp_path):
    path = write_json({"a": np.int64(3), "b": np.array([1.5, 2.0]), "c": (np.float64(0.25),)}, tmp_path / "x.json")
    assert json.loads(path.read_text()) == {"a": 3, "b": [1.5, 2.0], "c": [0.25]}


def test_write_csv_creates_parents(tmp_path):
    path = write_csv(pd.DataFrame({"a": [1]}), tmp_path / "deep" / "dir" / "a.csv")
    assert path.read_text() == "a\n1\n"


def test_tooltips():
    assert "How to Read" in get_chart_tooltip("convergence")
    assert get_chart_tooltip("convergence", "run").startswith("**run**")
    assert get_chart_tooltip("missing") == ""
    for chart in CHARTS:
        file, x, ys = chart_columns(chart)
        assert file.endswith(".csv") and x and ys


def test_figures_from_frames(run_dir):
    files = read_run(run_dir)
    metrics = files["epoch_metrics.csv"]
    assert len(create_convergence_chart(metrics).data) == 2
    assert len(create_cost_chart({"a": metrics, "b": metrics}).data) == 2
    hist = create_histogram_chart(files["histogram_epoch_0.csv"])
    assert len(hist.data[0].x) == HIST_BINS
    assert len(create_error_cdf_chart(files["test_error_cdf.csv"]).data) == 1
    path = pd.DataFrame({"step": [0, 1], "x": [0.1, -0.2], "loss": [0.0, -0.1]})
    assert len(create_toy_path_chart(path).data) == 2


def test_render_run(run_dir, tmp_path):
    written = render_run(run_dir, tmp_path / "figs")
    assert sorted(p.name for p in written) == ["convergence.html", "cost.html", "error_cdf.html",
                                               "histogram_epoch_0.html", "histogram_epoch_2.html"]
    assert all(p.stat().st_size > 0 for p in written)
