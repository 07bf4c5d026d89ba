"""Retrieval, multi-label ranking metrics, and linear probing on frozen features.

Everything here is rank-based and deterministic: ties contribute 1/2 to the
pairwise ranking statistic, and rank orderings break ties by lower item
index, so two runs of the same table give identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import ensure_matrix


@dataclass
class ScoreTable:
    """Score matrix (items x classes) with a binary gold matrix of equal shape."""

    scores: np.ndarray
    gold: np.ndarray

    def __post_init__(self):
        scores = ensure_matrix(self.scores, "scores")
        gold = np.asarray(self.gold)
        if gold.shape != scores.shape:
            raise ValueError(f"gold shape {gold.shape} != scores shape {scores.shape}")
        if not np.all((gold == 0) | (gold == 1)):
            raise ValueError("gold must be binary")
        self.scores = scores
        self.gold = gold.astype(np.int8)


def _diag_ranks(z: np.ndarray) -> np.ndarray:
    """Rank of each diagonal entry within its row; equal scores at a lower
    column index rank ahead."""
    n = z.shape[0]
    diag = np.diag(z)
    better = (z > diag[:, None]).sum(axis=1)
    cols = np.arange(n)
    tied_before = ((z == diag[:, None]) & (cols[None, :] < cols[:, None])).sum(axis=1)
    return 1 + better + tied_before


def retrieval_metrics(z) -> dict:
    """Rank-of-diagonal statistics for both directions of a square score matrix."""
    z = ensure_matrix(z, "z")
    if z.shape[0] != z.shape[1]:
        raise ValueError(f"retrieval expects a square matrix, got {z.shape}")

    def stats(m):
        ranks = _diag_ranks(m)
        return {
            "recall1": float(np.mean(ranks <= 1)),
            "recall5": float(np.mean(ranks <= 5)),
            "mean_rank": float(np.mean(ranks)),
        }

    return {"i2t": stats(z), "t2i": stats(z.T)}


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their mean rank."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc(table: ScoreTable) -> dict:
    """Pairwise ranking statistic per class; ties count 1/2.

    Classes without both a positive and a negative are skipped and listed.
    """
    n_items, n_classes = table.scores.shape
    per_class = np.full(n_classes, np.nan)
    skipped = []
    for c in range(n_classes):
        gold = table.gold[:, c]
        n_pos = int(gold.sum())
        n_neg = n_items - n_pos
        if n_pos == 0 or n_neg == 0:
            skipped.append(c)
            continue
        ranks = _average_ranks(table.scores[:, c])
        rank_sum = ranks[gold == 1].sum()
        per_class[c] = (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    valid = ~np.isnan(per_class)
    macro = float(per_class[valid].mean()) if valid.any() else float("nan")
    return {"per_class": per_class, "macro": macro, "skipped": skipped}


def map_score(table: ScoreTable) -> dict:
    """Mean average precision; precision is averaged at each positive's rank,
    scores descending, ties broken by lower item index."""
    n_items, n_classes = table.scores.shape
    per_class = np.full(n_classes, np.nan)
    skipped = []
    for c in range(n_classes):
        gold = table.gold[:, c]
        n_pos = int(gold.sum())
        if n_pos == 0 or n_pos == n_items:
            skipped.append(c)
            continue
        order = np.argsort(-table.scores[:, c], kind="stable")
        hits = gold[order] == 1
        cum_hits = np.cumsum(hits)
        ranks = np.arange(1, n_items + 1)
        per_class[c] = float((cum_hits[hits] / ranks[hits]).mean())
    valid = ~np.isnan(per_class)
    macro = float(per_class[valid].mean()) if valid.any() else float("nan")
    return {"per_class": per_class, "mAP": macro, "skipped": skipped}


@dataclass
class ProbeConfig:
    lr: float = 0.5
    max_iters: int = 500
    tol: float = 1e-6


def linear_probe(train_feats, train_gold, test_feats, test_gold,
                 cfg: ProbeConfig | None = None) -> dict:
    """Train one linear layer with logistic loss by full-batch gradient descent
    on frozen features, then score the disjoint test split."""
    cfg = cfg or ProbeConfig()
    X = ensure_matrix(train_feats, "train_feats")
    Xt = ensure_matrix(test_feats, "test_feats")
    Y = np.asarray(train_gold, dtype=np.float64)
    Yt = np.asarray(test_gold)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Yt.ndim == 1:
        Yt = Yt[:, None]
    if Y.shape[0] != X.shape[0] or Yt.shape[0] != Xt.shape[0]:
        raise ValueError("feature/label row counts disagree")
    if not ((Y.max(axis=0) > 0) & (Y.min(axis=0) < 1)).any():
        raise ValueError("training split is single-class for every category")

    n, d = X.shape
    k = Y.shape[1]
    W = np.zeros((d, k))
    b = np.zeros(k)
    prev = np.inf
    for _ in range(cfg.max_iters):
        logits = X @ W + b
        p = 1.0 / (1.0 + np.exp(-logits))
        # mean binary cross-entropy, numerically padded
        loss = float(-np.mean(Y * np.log(p + 1e-12) + (1 - Y) * np.log(1 - p + 1e-12)))
        g = (p - Y) / (n * k)
        W -= cfg.lr * (X.T @ g)
        b -= cfg.lr * g.sum(axis=0)
        if abs(prev - loss) <= cfg.tol:
            break
        prev = loss

    table = ScoreTable(Xt @ W + b, Yt)
    return {
        "auc": auc(table),
        "map": map_score(table),
        "weights": W,
        "bias": b,
    }
