"""
Chart definitions: which run file and columns each figure reads, and how to read it
"""

CHARTS = {
    "convergence": {
        "file": "epoch_metrics.csv",
        "x": "epoch",
        "y": ["train_loss", "val_metric"],
        "help": "**Data Used:** per-epoch training loss and validation metric (MAE for regression, "
                "error rate for classification)\n\n**How to Read:** the lowest validation point marks the "
                "convergence epoch reported in summary.json.",
    },
    "cost": {
        "file": "epoch_metrics.csv",
        "x": "grad_evals",
        "y": ["val_metric"],
        "help": "**Data Used:** validation metric against cumulative gradient circuit evaluations\n\n"
                "**How to Read:** curves further left reach the same accuracy with fewer circuits.",
    },
    "toy_path": {
        "file": "trajectory.csv",
        "x": "x",
        "y": ["loss"],
        "help": "**Data Used:** circuit output x and L(x) after every optimizer step, drawn over the "
                "landscape\n\n**How to Read:** the path starts at the first step and should settle in "
                "the deepest valley.",
    },
    "gradient_histogram": {
        "file": "histogram_epoch_{epoch}.csv",
        "x": "bin_left",
        "y": ["count"],
        "help": "**Data Used:** per-sample Jacobian entries of one epoch in 101 bins over [-0.5, 0.5] "
                "plus two outlier bins\n\n**How to Read:** a tall spike at zero means the gradient "
                "signal has vanished.",
    },
    "error_cdf": {
        "file": "test_error_cdf.csv",
        "x": "abs_error",
        "y": ["cumulative_fraction"],
        "help": "**Data Used:** sorted absolute test errors of the best 97% of test samples\n\n"
                "**How to Read:** a curve rising steeply near zero generalizes well.",
    },
}


def get_chart_tooltip(chart_type: str, context: str = "") -> str:
    """Help text for a chart, optionally prefixed with run context"""
    help_text = CHARTS.get(chart_type, {}).get("help", "")
    if context:
        return f"**{context}**\n\n{help_text}"
    return help_text


def chart_columns(chart_type: str) -> tuple[str, str, list[str]]:
    """(file, x column, y columns) a chart reads"""
    spec = CHARTS[chart_type]
    return spec["file"], spec["x"], list(spec["y"])
