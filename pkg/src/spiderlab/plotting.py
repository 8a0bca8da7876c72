"""Figure rendering for comparison reports.

Renders the median targets-found curves and the per-strategy depth
histograms to PNG files next to the delimited report output.  Uses the
Agg backend so it works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .evalstat import DepthHistogram

_DPI = 130


def render_curves(curves: dict[str, np.ndarray], path: str | Path, title: str = "") -> Path:
    """One figure, one line per strategy: median targets found vs fetches."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in sorted(curves):
        values = np.asarray(curves[name])
        ax.plot(np.arange(len(values)), values, label=name, linewidth=1.6)
    ax.set_xlabel("fetches")
    ax.set_ylabel("median targets found")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize=9)
    ax.grid(True, linewidth=0.3, alpha=0.6)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_histograms(
    histograms: dict[str, DepthHistogram], path: str | Path, title: str = ""
) -> Path:
    """Per-strategy bar charts of fetches by depth, hits overlaid."""
    path = Path(path)
    names = sorted(histograms)
    fig, axes = plt.subplots(
        len(names), 1, figsize=(7, 2.2 * len(names)), sharex=True, squeeze=False
    )
    max_depth = max(
        (d for h in histograms.values() for d in h.pages), default=0
    )
    for ax, name in zip(axes[:, 0], names):
        hist = histograms[name]
        depths = np.arange(max_depth + 1)
        pages = np.array([hist.pages.get(int(d), 0) for d in depths])
        hits = np.array([hist.hits.get(int(d), 0) for d in depths])
        ax.bar(depths - 0.2, pages, width=0.4, label="pages", color="#4878a8")
        ax.bar(depths + 0.2, hits, width=0.4, label="hits", color="#d1662c")
        ax.set_ylabel(name, fontsize=8)
        ax.legend(fontsize=7, loc="upper right")
    axes[-1, 0].set_xlabel("depth")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
