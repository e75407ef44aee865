"""Static figure rendering for the report path.

Figures are written as SVG next to the delimited tables that hold the
same numbers, so every plot is reproducible without this module.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_scaling_figure(points: Sequence[Tuple[float, float]],
                          slope: float,
                          intercept: float,
                          p_positive: float,
                          p_negative: float,
                          path,
                          title: str = "Predictive power vs. model size",
                          ylabel: str = "Pearson r") -> None:
    """Scatter r against log10 parameter count with the fitted line."""
    fig, ax = plt.subplots(figsize=(6, 4))
    if points:
        x = np.array([p[0] for p in points])
        r = np.array([p[1] for p in points])
        ax.scatter(x, r, s=22, color="#1f77b4", alpha=0.75, zorder=3)
        grid = np.linspace(x.min(), x.max(), 50)
        ax.plot(grid, slope * grid + intercept, color="#d62728", lw=1.5,
                label=f"slope = {slope:.4g}")
        ax.legend(frameon=False, fontsize=9)
    ax.set_xlabel("log10 parameter count")
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=11)
    caption = (f"slope = {slope:.4g}, "
               f"p(slope > 0) = {p_positive:.4g}, "
               f"p(slope < 0) = {p_negative:.4g}")
    fig.text(0.5, 0.005, caption, ha="center", fontsize=8, color="0.35")
    fig.tight_layout(rect=(0, 0.04, 1, 1))
    # Date=None keeps reruns byte-stable
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
