"""Figure construction and deterministic PNG output.

House style, fixed so reruns are byte-identical: steel blue data, gray
dashed slope guide anchored at the first point, dotted grid, 150 dpi, and
no software tag in the PNG metadata.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .readers import PlotInputError, SeriesData, TrajectoryData  # noqa: E402

DATA_COLOR = "#1f77b4"
GUIDE_COLOR = "#777777"
DPI = 150


def loglog_figure(series: SeriesData):
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.loglog(series.x, series.y, marker="o", markersize=4,
              color=DATA_COLOR, label="measured")
    x0, y0 = series.x[0], series.y[0]
    guide = [y0 * (x / x0) ** series.slope for x in series.x]
    ax.loglog(series.x, guide, linestyle="--", color=GUIDE_COLOR,
              label=f"slope = {series.slope:.2f}")
    ax.set_xlabel(series.x_label)
    ax.set_ylabel(series.y_label)
    ax.grid(True, which="both", linestyle=":", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    return fig


def trajectories_figure(trajectories: list[TrajectoryData]):
    n = len(trajectories)
    fig, axes = plt.subplots(1, n, figsize=(3.6 * n, 3.0), squeeze=False)
    for ax, tr in zip(axes[0], trajectories):
        # piecewise-constant state path: x_pre[0] until the first jump,
        # then x_post[k] from jump k on
        t = (0.0,) + tr.taus
        x = (tr.x_pre[0],) + tr.x_post
        ax.step(t, x, where="post", color=DATA_COLOR, linewidth=1.0)
        ax.set_title(f"x0 = {tr.x_pre[0]:g}", fontsize=10)
        ax.set_xlabel("t")
        ax.grid(True, linestyle=":", alpha=0.4)
    axes[0][0].set_ylabel("state")
    fig.tight_layout()
    return fig


def save_png(fig, path) -> None:
    path = Path(path)
    if path.suffix != ".png":
        raise PlotInputError(f"output path must end in .png, got {path}")
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(path, format="png", dpi=DPI, metadata={"Software": None})
    finally:
        plt.close(fig)
