"""
Run-directory writers. Everything a run emits is CSV or JSON.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from modules.training import TrainReport, absolute_error_cdf, gradient_histogram
from utils.datasets import Task

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

EPOCH_METRICS = "epoch_metrics.csv"
SUMMARY = "summary.json"
TRAJECTORY = "trajectory.csv"
ERROR_CDF = "test_error_cdf.csv"
HISTOGRAM_PATTERN = "histogram_epoch_{epoch}.csv"


def write_csv(df: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("wrote %s (%d rows)", path, len(df))
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def write_json(data: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2) + "\n")
    return path


def write_run(out_dir, report: TrainReport, config_echo: dict, extra: dict | None = None,
              task: Task = Task.REGRESSION) -> list[Path]:
    """epoch_metrics.csv, summary.json, one histogram CSV per captured epoch, and the test error CDF"""
    out_dir = Path(out_dir)
    written = [write_csv(report.to_frame(), out_dir / EPOCH_METRICS)]

    summary = {"config": config_echo, **report.summary()}
    if extra:
        summary.update(extra)
    written.append(write_json(summary, out_dir / SUMMARY))

    for epoch in sorted(report.histograms):
        written.append(write_csv(gradient_histogram(report, epoch),
                                 out_dir / HISTOGRAM_PATTERN.format(epoch=epoch)))

    if task is Task.REGRESSION and report.test_predictions is not None:
        cdf = absolute_error_cdf(report.test_predictions, report.test_targets)
        written.append(write_csv(cdf, out_dir / ERROR_CDF))

    logger.info("wrote %d files to %s", len(written), out_dir)
    return written


def write_toy(out_dir, trajectory: pd.DataFrame, report: TrainReport, config_echo: dict) -> list[Path]:
    out_dir = Path(out_dir)
    written = [
        write_csv(trajectory, out_dir / TRAJECTORY),
        write_csv(report.to_frame(), out_dir / EPOCH_METRICS),
    ]
    summary = {
        "config": config_echo,
        "initial_x": float(trajectory["x"].iloc[0]),
        "final_x": float(trajectory["x"].iloc[-1]),
        "initial_loss": float(trajectory["loss"].iloc[0]),
        "final_loss": float(trajectory["loss"].iloc[-1]),
        "best_loss": float(trajectory["loss"].min()),
        **report.summary(),
    }
    written.append(write_json(summary, out_dir / SUMMARY))
    logger.info("wrote %d files to %s", len(written), out_dir)
    return written


def read_run(run_dir) -> dict[str, pd.DataFrame | dict]:
    """Load whatever a run directory holds, keyed by file name"""
    run_dir = Path(run_dir)
    found: dict[str, pd.DataFrame | dict] = {}
    for path in sorted(run_dir.glob("*.csv")):
        found[path.name] = pd.read_csv(path)
    summary = run_dir / SUMMARY
    if summary.exists():
        found[SUMMARY] = json.loads(summary.read_text())
    return found
