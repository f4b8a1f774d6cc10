"""Forecast plot emission: SVG figure plus a companion CSV of plotted points.

Figures are static SVG so backtest output can be committed and diffed.
Matplotlib embeds a content hash salted by ``svg.hashsalt`` and a creation
date in SVG output; both are pinned here so seed-matched reruns produce
byte-identical files.
"""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from ._serde import fmt, write_atomic
from .errors import DataError

plt.rcParams["svg.hashsalt"] = "stockcast"


def _as_vector(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DataError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def plot_points_csv(
    actual: np.ndarray,
    predicted: np.ndarray,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
) -> str:
    """Render the plotted points as CSV text, one row per forecast step."""
    if (lower is None) != (upper is None):
        raise DataError("lower and upper must be given together")
    columns = {"actual": actual, "predicted": predicted}
    if lower is not None:
        columns["lower"] = lower
        columns["upper"] = upper
    lines = ["step," + ",".join(columns)]
    for i in range(len(actual)):
        cells = [str(i)] + [fmt(col[i]) for col in columns.values()]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def forecast_plot(
    path: str | Path,
    title: str,
    actual,
    predicted,
    lower=None,
    upper=None,
) -> Path:
    """Write an actual-vs-predicted figure to ``path`` (.svg) plus a CSV twin.

    ``lower``/``upper`` add a shaded interval band around the prediction
    line. Actuals are drawn as black dots, the forecast as a solid line.
    Returns the SVG path; the CSV lands next to it with the same stem.
    """
    path = Path(path)
    actual = _as_vector("actual", actual)
    predicted = _as_vector("predicted", predicted)
    if len(actual) != len(predicted):
        raise DataError("actual and predicted lengths differ")
    if (lower is None) != (upper is None):
        raise DataError("lower and upper must be given together")
    if lower is not None:
        lower = _as_vector("lower", lower)
        upper = _as_vector("upper", upper)
        if len(lower) != len(actual) or len(upper) != len(actual):
            raise DataError("interval bounds must match forecast length")

    steps = np.arange(len(actual))
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    try:
        if lower is not None:
            ax.fill_between(
                steps, lower, upper, color="skyblue", alpha=0.5, label="interval"
            )
        ax.plot(steps, predicted, color="tab:blue", linewidth=1.5, label="predicted")
        ax.plot(
            steps,
            actual,
            linestyle="none",
            marker="o",
            color="black",
            markersize=4,
            label="actual",
        )
        ax.set_title(title)
        ax.set_xlabel("step")
        ax.set_ylabel("price")
        ax.legend(loc="best")
        fig.tight_layout()
        # metadata Date=None drops the timestamp matplotlib would otherwise
        # embed, keeping rerun output byte-identical
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    write_atomic(path, buf.getvalue())

    csv_path = path.with_suffix(".csv")
    write_atomic(csv_path, plot_points_csv(actual, predicted, lower, upper))
    return path
