"""Figure rendering for command-line reports.

Every report-producing command pairs its delimited output with a rendered
figure so results can be eyeballed without extra tooling. All functions
write a PNG to the given path and return the path.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graph import Graph

__all__ = ["save_layout_figure", "save_eval_figure", "save_bench_figure",
           "save_history_figure"]


def save_layout_figure(g: Graph, pos: np.ndarray, path, title: str | None = None):
    pos = np.asarray(pos, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6, 6))
    if g.m:
        segs = pos[g.edges]   # (m, 2, 2)
        for (a, b) in segs:
            ax.plot([a[0], b[0]], [a[1], b[1]], color="#4878a8",
                    linewidth=0.8, zorder=1)
    size = max(4.0, min(40.0, 600.0 / max(1, g.n)))
    ax.scatter(pos[:, 0], pos[:, 1], s=size, color="#1d3557", zorder=2)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_eval_figure(methods: list[str], means: list[float], path,
                     ylabel: str = "mean normalized stress"):
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.arange(len(methods))
    ax.bar(x, means, color="#4878a8", width=0.6)
    ax.set_xticks(x)
    ax.set_xticklabels(methods)
    ax.set_ylabel(ylabel)
    for xi, v in zip(x, means):
        ax.text(xi, v, f"{v:.4f}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_bench_figure(sizes: list[int], seconds: list[float], path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sizes, seconds, "o-", color="#1d3557", label="measured")
    # reference slopes anchored at the first point
    s0, t0 = sizes[0], seconds[0]
    ref = np.array(sizes, dtype=np.float64)
    ax.plot(ref, t0 * ref / s0, "--", color="#999999", label="linear")
    ax.plot(ref, t0 * (ref / s0) ** 2, ":", color="#999999", label="quadratic")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("nodes")
    ax.set_ylabel("seconds")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_history_figure(history: dict, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    if history.get("train_loss"):
        ax.plot(history["epoch"], history["train_loss"], label="train loss",
                color="#4878a8")
    if history.get("val_stress"):
        ax.plot(history["epoch"], history["val_stress"], label="validation",
                color="#e07a5f")
    ax.set_xlabel("epoch")
    ax.set_ylabel("normalized stress")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
