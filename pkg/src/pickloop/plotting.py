"""PNG figures for evaluation and comparison reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from pickloop.core import DAYS  # noqa: E402

_STYLE = {"figure.dpi": 110, "axes.spines.top": False, "axes.spines.right": False,
          "axes.grid": True, "grid.alpha": 0.3, "font.size": 9}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_distance_histogram(rows: Sequence[tuple], path) -> Path:
    """Bars of picks per shelf distance with SKU counts annotated."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        if rows:
            dist = [f"{r[0]:.2f}" for r in rows]
            picks = [r[1] for r in rows]
            bars = ax.bar(dist, picks, color="#4c72b0")
            for bar, r in zip(bars, rows):
                ax.annotate(f"{r[2]}", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                            ha="center", va="bottom", fontsize=7)
        ax.set_xlabel("shelf distance (m)")
        ax.set_ylabel("average picks per day")
        ax.set_title("Picks by shelf distance (labels: SKU count)")
        return _save(fig, path)


def plot_day_deviation(dev: np.ndarray, path, delta_day: float | None = None) -> Path:
    """Station x weekday relative deviation from the daily mean, as a heatmap."""
    dev = np.asarray(dev, dtype=float) * 100
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 0.45 * max(len(dev), 2) + 1.2))
        lim = max(float(np.abs(dev).max()) if dev.size else 1.0, 1e-9)
        im = ax.imshow(dev if dev.size else np.zeros((1, len(DAYS))), cmap="RdBu_r", vmin=-lim, vmax=lim,
                       aspect="auto")
        ax.set_xticks(range(len(DAYS)), DAYS)
        ax.set_yticks(range(len(dev)), [f"K{k + 1}" for k in range(len(dev))])
        ax.grid(False)
        for (i, t), v in np.ndenumerate(dev):
            bold = delta_day is not None and abs(v) > delta_day * 100 + 1e-9
            ax.text(t, i, f"{v:+.2f}", ha="center", va="center", fontsize=7,
                    color="white" if abs(v) > 0.6 * lim else "black", fontweight="bold" if bold else "normal")
        fig.colorbar(im, ax=ax, label="deviation from daily mean (%)")
        ax.set_title("Station workload deviation by weekday")
        return _save(fig, path)


def plot_comparison(labels: Sequence[str], part1: Sequence[float], part2_weighted: Sequence[float],
                    path) -> Path:
    """Stacked objective parts per planning mode."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        x = np.arange(len(labels))
        ax.bar(x, part1, color="#4c72b0", label="score sum")
        ax.bar(x, part2_weighted, bottom=part1, color="#dd8452", label="alpha x efficiency")
        ax.set_xticks(x, labels)
        ax.set_ylabel("objective")
        ax.legend(frameon=False, loc="upper center", bbox_to_anchor=(0.5, -0.12), ncol=2)
        ax.set_title("Objective by planning mode")
        return _save(fig, path)
