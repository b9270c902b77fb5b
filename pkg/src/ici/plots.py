"""Cumulative cost figures written next to the CSV reports."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .bench import ANSWERABLE_COST, CostDistribution

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
}


def figure_size(scale: float = 1.0) -> tuple[float, float]:
    golden = (5 ** 0.5 - 1.0) / 2.0
    width = 6.4 * scale
    return width, width * golden


def plot_cnv(distributions: Mapping[str, CostDistribution], path, title: str = "",
             threshold: int | None = ANSWERABLE_COST, dpi: int = 120) -> Path:
    """Step plot of ``(cost, cnv)`` for each distribution on a log cost axis."""
    fig = Figure(figsize=figure_size())
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    for label, dist in distributions.items():
        pts = dist.points
        if not pts:
            continue
        xs = [c for c, _ in pts]
        ys = [n for _, n in pts]
        ax.step(xs, ys, where="post", label=f"{label} (n={len(dist.costs)})")
    if threshold:
        ax.axvline(threshold, color="0.5", linestyle="--", linewidth=0.8, label=f"cost {threshold}")
    ax.set_xscale("log")
    ax.set_xlabel("cost (max factor size)", fontsize=STYLE["axes.labelsize"])
    ax.set_ylabel("cumulative number", fontsize=STYLE["axes.labelsize"])
    if title:
        ax.set_title(title, fontsize=STYLE["font.size"])
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="lower right", fontsize=STYLE["legend.fontsize"])
    ax.grid(True, which="major", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=dpi, metadata={"Software": None})
    return path
