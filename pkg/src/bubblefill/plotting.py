"""Figures written next to the CSV outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .model import SimReport  # noqa: E402

POLICY_COLORS = {"specinf": "#1b9e77", "co_exec": "#d95f02", "exclusive": "#7570b3"}

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def plot_utilization(timelines: Mapping[str, Sequence[tuple[float, float]]], path: Path | str,
                     window_s: float | None = 3.0) -> Path:
    """Step plot of training-GPU busy percent per policy (one panel each)."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(timelines), 1, sharex=True, squeeze=False,
                                 figsize=(6.4, 1.6 * len(timelines) + 0.6))
        for ax, (policy, samples) in zip(axes[:, 0], timelines.items()):
            pts = [(t / 1e6, u) for t, u in samples if window_s is None or t / 1e6 <= window_s]
            if pts:
                xs, ys = zip(*pts)
                ax.step(xs, ys, where="post", lw=0.8, color=POLICY_COLORS.get(policy, "k"))
            ax.set_ylim(0, 105)
            ax.set_ylabel("util %")
            ax.set_title(policy, loc="left")
        axes[-1, 0].set_xlabel("time (s)")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_comparison(rows: Sequence[SimReport], path: Path | str) -> Path:
    path = Path(path)
    metrics = [("train_tput_norm", "normalized training tput"),
               ("offline_tput_rps", "offline req/s"),
               ("online_p95_ms", "online p95 (ms)")]
    metrics = [(k, label) for k, label in metrics
               if any(getattr(r, k) not in (None, 0.0) for r in rows)]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(metrics), squeeze=False, figsize=(2.6 * len(metrics), 2.6))
        for ax, (key, label) in zip(axes[0], metrics):
            names = [r.policy for r in rows]
            vals = [getattr(r, key) or 0.0 for r in rows]
            ax.bar(names, vals, color=[POLICY_COLORS.get(n, "grey") for n in names])
            ax.set_title(label)
            ax.tick_params(axis="x", rotation=20)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
