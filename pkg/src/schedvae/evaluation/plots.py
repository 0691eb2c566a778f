"""SVG figures comparing a synthetic sample with the real one."""

from __future__ import annotations

from collections import Counter
from pathlib import Path

import numpy as np

from ..encoding import encode_discrete_batch
from ..schedule import ActivityType

COLOURS = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "schedvae"
    return plt


def activity_frequencies(sample, step: int = 10) -> np.ndarray:
    """(bins, 8) share of schedules doing each activity per time bin."""
    if len(sample) == 0:
        return np.zeros((1440 // step, len(ActivityType)))
    tokens = encode_discrete_batch(sample, step)
    out = np.stack([(tokens == a).mean(axis=0) for a in range(len(ActivityType))], axis=1)
    return out


def plot_activity_frequencies(real, synthetic, path: str | Path, step: int = 10) -> None:
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.5), sharey=True)
    hours = np.arange(1440 // step) * step / 60
    for ax, sample, title in zip(axes, (real, synthetic), ("observed", "synthetic")):
        freq = activity_frequencies(sample, step)
        ax.stackplot(hours, freq.T, colors=COLOURS, labels=[a.label for a in ActivityType])
        ax.set_title(title)
        ax.set_xlim(0, 24)
        ax.set_xlabel("hour")
    axes[0].set_ylabel("share of schedules")
    axes[1].legend(loc="center left", bbox_to_anchor=(1, 0.5), fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _sequence(s) -> str:
    return "-".join(a.label[:2] for a in s.acts)


def plot_top_sequences(real, synthetic, path: str | Path, k: int = 15) -> None:
    plt = _pyplot()
    rc = Counter(_sequence(s) for s in real)
    sc = Counter(_sequence(s) for s in synthetic)
    top = [seq for seq, _ in sorted(rc.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]
    y = np.arange(len(top))
    fig, ax = plt.subplots(figsize=(8, 0.3 * len(top) + 1.2))
    ax.barh(y - 0.2, [rc[t] / max(len(real), 1) for t in top], 0.4, label="observed")
    ax.barh(y + 0.2, [sc[t] / max(len(synthetic), 1) for t in top], 0.4, label="synthetic")
    ax.set_yticks(y, top, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("frequency")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
