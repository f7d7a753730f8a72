"""
Plotly figures built from run directories; every figure reads only the CSVs a run wrote
"""
from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

from modules.training import toy_loss
from utils.chart_tooltips import chart_columns, get_chart_tooltip
from utils.reporting import ERROR_CDF, TRAJECTORY, read_run

logger = logging.getLogger(__name__)

_HISTOGRAM_FILE = re.compile(r"histogram_epoch_(\d+)\.csv")


def _style(fig, title, xaxis_title, yaxis_title, chart_type):
    fig.update_layout(
        title=title,
        template="plotly_white",
        height=450,
        xaxis_title=xaxis_title,
        yaxis_title=yaxis_title,
    )
    caption = get_chart_tooltip(chart_type).split("\n\n")[-1].replace("**How to Read:** ", "")
    fig.add_annotation(
        text=caption,
        xref="paper", yref="paper",
        x=0.0, y=-0.22,
        showarrow=False,
        font=dict(size=10, color="gray"),
        align="left",
    )
    return fig


def create_convergence_chart(metrics: pd.DataFrame, title: str = "Convergence"):
    """Training loss and validation metric per epoch"""
    _, x, ys = chart_columns("convergence")
    long = metrics.melt(id_vars=[x], value_vars=ys, var_name="series", value_name="value")
    fig = px.line(long, x=x, y="value", color="series", markers=True)
    best = int(metrics["val_metric"].idxmin())
    fig.add_vline(x=metrics[x].iloc[best], line_dash="dash", line_color="gray")
    return _style(fig, title, "Epoch", "Value", "convergence")


def create_cost_chart(runs: dict[str, pd.DataFrame], title: str = "Validation metric vs. circuit cost"):
    _, x, ys = chart_columns("cost")
    fig = go.Figure()
    for label, metrics in runs.items():
        fig.add_trace(go.Scatter(x=metrics[x], y=metrics[ys[0]], mode="lines+markers", name=label))
    return _style(fig, title, "Gradient circuit evaluations", "Validation metric", "cost")


def create_toy_path_chart(trajectory: pd.DataFrame, title: str = "Toy minimization path"):
    grid = np.linspace(-np.pi, np.pi, 2001)
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=grid, y=toy_loss(grid), mode="lines", name="L(x)",
                             line=dict(color="lightgray")))
    fig.add_trace(go.Scatter(
        x=trajectory["x"], y=trajectory["loss"], mode="lines+markers", name="path",
        marker=dict(color=trajectory["step"], colorscale="viridis", size=6),
        hovertext=[f"step {s}" for s in trajectory["step"]],
    ))
    return _style(fig, title, "x", "L(x)", "toy_path")


def create_histogram_chart(histogram: pd.DataFrame, title: str = "Gradient histogram"):
    """Inner bins as bars; the two outlier bins are reported in the legend"""
    inner = histogram.iloc[1:-1]
    centers = (inner["bin_left"] + inner["bin_right"]) / 2.0
    below, above = int(histogram["count"].iloc[0]), int(histogram["count"].iloc[-1])
    fig = go.Figure(go.Bar(x=centers, y=inner["count"], name=f"outliers: {below} below, {above} above"))
    fig.update_layout(showlegend=True, bargap=0.0)
    return _style(fig, title, "Jacobian entry", "Count", "gradient_histogram")


def create_error_cdf_chart(cdf: pd.DataFrame, title: str = "Test absolute error CDF"):
    _, x, ys = chart_columns("error_cdf")
    fig = px.line(cdf, x=x, y=ys[0])
    return _style(fig, title, "Absolute error", "Cumulative fraction", "error_cdf")


def render_run(run_dir, out_dir=None) -> list[Path]:
    """Write one HTML file per figure the run's data supports"""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir / "figures"
    files = read_run(run_dir)
    name = run_dir.name
    figures = {}

    if "epoch_metrics.csv" in files:
        figures["convergence"] = create_convergence_chart(files["epoch_metrics.csv"], f"{name}: convergence")
        figures["cost"] = create_cost_chart({name: files["epoch_metrics.csv"]})
    if TRAJECTORY in files:
        figures["toy_path"] = create_toy_path_chart(files[TRAJECTORY], f"{name}: toy path")
    if ERROR_CDF in files:
        figures["error_cdf"] = create_error_cdf_chart(files[ERROR_CDF], f"{name}: test error CDF")
    for file_name, frame in files.items():
        match = _HISTOGRAM_FILE.fullmatch(file_name)
        if match:
            epoch = int(match.group(1))
            figures[f"histogram_epoch_{epoch}"] = create_histogram_chart(frame, f"{name}: gradients, epoch {epoch}")

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for key, fig in figures.items():
        path = out_dir / f"{key}.html"
        fig.write_html(path, include_plotlyjs="cdn")
        written.append(path)
    logger.info("rendered %d figures into %s", len(written), out_dir)
    return written
