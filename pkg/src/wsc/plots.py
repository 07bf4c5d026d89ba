"""Figure rendering for run reports; every figure lands next to its CSV."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update({
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
})

VARIANT_STYLE = {
    "infonce": {"color": "#888888", "marker": "o", "label": "baseline (no label weights)"},
    "sa": {"color": "#1f77b4", "marker": "s", "label": "label-weighted"},
    "sa_be": {"color": "#d62728", "marker": "^", "label": "label-weighted + queue"},
}


def _save(fig, path) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_training_figure(history: list, path) -> str:
    """Step loss and epoch retrieval curves for one run."""
    steps = [(r["step"], r["loss_total"]) for r in history if r["kind"] == "step"]
    epochs = [(r["epoch"], r["retrieval_recall1"], r["zs_auc"])
              for r in history if r["kind"] == "epoch"]
    fig, axes = plt.subplots(1, 2, figsize=(8, 3))
    if steps:
        xs, ys = zip(*steps)
        axes[0].plot(xs, ys, lw=0.8, color="#1f77b4")
    axes[0].set_xlabel("step")
    axes[0].set_ylabel("total loss")
    if epochs:
        xs, r1, zs = zip(*epochs)
        axes[1].plot(xs, r1, marker="o", ms=3, label="recall@1")
        axes[1].plot(xs, zs, marker="s", ms=3, label="zero-shot AUC")
        axes[1].legend()
    axes[1].set_xlabel("epoch")
    axes[1].set_ylabel("held-out metric")
    return _save(fig, path)


def render_sweep_figure(rows: list, path, metric: str = "retrieval_recall1") -> str:
    """Final metric against target label entropy, one line per variant."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    variants = sorted({r["variant"] for r in rows})
    for variant in variants:
        style = VARIANT_STYLE.get(variant, {"marker": "o", "label": variant})
        pts: dict = {}
        for r in rows:
            if r["variant"] == variant:
                pts.setdefault(r["mle_target"], []).append(r[metric])
        xs = sorted(pts)
        means = [float(np.mean(pts[x])) for x in xs]
        ax.plot(xs, means, marker=style["marker"], color=style.get("color"),
                label=style["label"])
        for x in xs:
            ax.plot([x] * len(pts[x]), pts[x], ".", color=style.get("color"), alpha=0.35, ms=3)
    ax.set_xlabel("target mean label entropy")
    ax.set_ylabel(metric)
    ax.legend(fontsize=7)
    return _save(fig, path)


def render_class_auc_figure(names, per_class, path) -> str:
    """Horizontal per-class AUC bars; NaN (skipped) classes are left empty."""
    per_class = np.asarray(per_class, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 0.22 * len(names) + 1.2))
    ypos = np.arange(len(names))
    vals = np.nan_to_num(per_class, nan=0.0)
    ax.barh(ypos, vals, color="#1f77b4")
    ax.set_yticks(ypos)
    ax.set_yticklabels(names, fontsize=6)
    ax.invert_yaxis()
    ax.set_xlabel("AUC")
    ax.set_xlim(0, 1)
    return _save(fig, path)
