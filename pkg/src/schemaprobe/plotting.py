"""Figures written next to the delimited reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

# no timestamps or version strings, so reruns give identical bytes
_PNG_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_recall_curves(reports: Sequence, path: str | Path, title: str = "") -> Path:
    """Macro recall against budget (log x axis), one line per report."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 3.2))
        for rep in reports:
            ax.plot(rep.budgets, rep.means, marker="o", ms=3, label=rep.method)
        ax.set_xscale("log")
        budgets = sorted({b for rep in reports for b in rep.budgets})
        ax.set_xticks(budgets)
        ax.set_xticklabels([str(b) for b in budgets])
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("budget B")
        ax.set_ylabel("recall @ B")
        if title:
            ax.set_title(title)
        ax.grid(alpha=0.3)
        ax.legend(frameon=False, loc="lower right")
        return _save(fig, Path(path))


def plot_gains(names: Sequence[str], gains: Sequence[float], path: str | Path) -> Path:
    """Marginal objective gain of each selected element, in selection order."""
    with plt.rc_context(STYLE):
        height = max(2.0, 0.22 * len(names) + 0.8)
        fig, ax = plt.subplots(figsize=(5.5, height))
        pos = range(len(names))
        ax.barh(list(pos), list(gains), color="0.35")
        ax.set_yticks(list(pos))
        ax.set_yticklabels(list(names), fontsize=7)
        ax.invert_yaxis()
        ax.set_xlabel("marginal gain")
        return _save(fig, Path(path))
