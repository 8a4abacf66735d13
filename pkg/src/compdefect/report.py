"""Delimited tables and matplotlib figures for the CLI report path."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no timestamps or version strings, so reruns write identical bytes
_PNG_META = {"Software": None}


def format_table(header: Sequence[str], rows: Sequence[Sequence], delimiter: str = "\t", digits: int = 4) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.{digits}f}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def pretty_table(header: Sequence[str], rows: Sequence[Sequence], digits: int = 3) -> str:
    cells = [list(header)] + [[f"{v:.{digits}f}" if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=100, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_loss_curve(history: Sequence[dict], path: str | Path) -> Path:
    epochs = [h["epoch"] for h in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in ("L1", "L2", "L3"):
        ax.plot(epochs, [h[key] for h in history], label=key)
    val = [(h["epoch"], h["val_score"]) for h in history if "val_score" in h]
    if val:
        ax2 = ax.twinx()
        ax2.plot(*zip(*val), "k--", marker="o", ms=3, label="val score")
        ax2.set_ylabel("validation macro-F1 + exact match")
        ax2.legend(loc="center right")
    ax.set_xlabel("epoch")
    ax.set_ylabel("training loss")
    ax.legend(loc="upper right")
    return _save(fig, Path(path))


def plot_confusion(matrix: np.ndarray, names: Sequence[str], path: str | Path) -> Path:
    n = len(names)
    fig, ax = plt.subplots(figsize=(1.0 + 0.45 * n, 1.0 + 0.4 * n))
    ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(n), names, rotation=90, fontsize=7)
    ax.set_yticks(range(n), names, fontsize=7)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    for i in range(n):
        for j in range(n):
            if matrix[i, j]:
                ax.text(j, i, str(int(matrix[i, j])), ha="center", va="center", fontsize=7)
    return _save(fig, Path(path))


def plot_per_class(names: Sequence[str], f1: Sequence[float], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(max(4.0, 0.4 * len(names) + 1), 4))
    ax.bar(range(len(names)), f1)
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=7)
    ax.set_ylim(0, 1)
    ax.set_ylabel("F1-score")
    return _save(fig, Path(path))


def plot_bleu_histogram(scores: Sequence[float], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(scores, bins=np.linspace(0, 1, 21))
    ax.set_xlabel("sentence BLEU")
    ax.set_ylabel("repairs")
    return _save(fig, Path(path))


__all__ = ["format_table", "pretty_table", "plot_loss_curve", "plot_confusion", "plot_per_class", "plot_bleu_histogram"]
