"""Figures written next to the TSV reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from hrdeid.dataset_builder import DatasetStats  # noqa: E402
from hrdeid.evaluation import ClassReport, EvalMode  # noqa: E402

# drop version and date stamps so identical data gives identical files
_META = {
    ".png": {"Software": None},
    ".svg": {"Creator": None, "Date": None},
    ".pdf": {"Creator": None, "Producer": None, "CreationDate": None},
}
matplotlib.rcParams["svg.hashsalt"] = "hrdeid"


def _save(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META.get(Path(path).suffix.lower()))
    plt.close(fig)


def plot_reports(reports: Sequence[ClassReport], mode: EvalMode, path: str | Path,
                 title: str | None = None) -> None:
    """Grouped bars per label: P/R/F1 for strict, recall alone for loose."""
    mode = EvalMode(mode)
    names = [r.label.value for r in reports]
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(names) + 2), 3.5))
    if mode is EvalMode.LOOSE:
        series = [("recall", [r.recall for r in reports])]
    else:
        series = [
            ("precision", [r.precision for r in reports]),
            ("recall", [r.recall for r in reports]),
            ("f1", [r.f1 for r in reports]),
        ]
    width = 0.8 / len(series)
    for k, (name, values) in enumerate(series):
        ax.bar(x + (k - (len(series) - 1) / 2) * width, values, width, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(title or f"{mode.value} de-identification")
    if len(series) > 1:
        ax.legend(frameon=False, fontsize="small")
    ax.spines[["top", "right"]].set_visible(False)
    _save(fig, path)


def plot_top_titles(stats: DatasetStats, path: str | Path) -> None:
    """Horizontal bars of the most frequent tagged titles."""
    fig, ax = plt.subplots(figsize=(6, 0.4 * max(1, len(stats.top)) + 1.2))
    names = [s for s, _ in stats.top][::-1]
    counts = [c for _, c in stats.top][::-1]
    ax.barh(names, counts, color="0.4")
    ax.set_xlabel("occurrences")
    ax.set_title(f"top {len(stats.top)} titles: {stats.top_share:.0%} of {stats.entities} entities")
    ax.spines[["top", "right"]].set_visible(False)
    _save(fig, path)
