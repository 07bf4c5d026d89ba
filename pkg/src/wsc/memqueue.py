"""Bounded FIFO memory of momentum-encoded feature pairs with their labels.

Entries are pushed pairwise, so one queue of (image feature, text feature,
label) triples backs both modality views; features and labels can never
fall out of sync. Eviction is strictly oldest-first.
"""

from __future__ import annotations

import numpy as np

from .labels import MultiHotLabel, labels_to_matrix
from .numerics import ensure_vector


class MemoryQueue:
    """Single-owner FIFO of (u, v, label) triples with bounded capacity."""

    def __init__(self, capacity: int, feature_dim: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        if feature_dim <= 0:
            raise ValueError("feature_dim must be positive")
        self.capacity = int(capacity)
        self.feature_dim = int(feature_dim)
        self._entries: list[tuple[np.ndarray, np.ndarray, MultiHotLabel]] = []

    @property
    def occupancy(self) -> int:
        return len(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def push_batch(self, u_feats, v_feats, labels) -> "MemoryQueue":
        """Append in batch order, then evict oldest entries beyond capacity."""
        u_feats = list(u_feats)
        v_feats = list(v_feats)
        labels = list(labels)
        if not (len(u_feats) == len(v_feats) == len(labels)):
            raise ValueError("features and labels must have equal lengths")
        for u, v, y in zip(u_feats, v_feats, labels):
            u = ensure_vector(u, "u")
            v = ensure_vector(v, "v")
            if u.size != self.feature_dim or v.size != self.feature_dim:
                raise ValueError(
                    f"expected feature dim {self.feature_dim}, got {u.size}/{v.size}"
                )
            if not isinstance(y, MultiHotLabel):
                raise TypeError("labels must be MultiHotLabel instances")
            self._entries.append((u.copy(), v.copy(), y))
        if len(self._entries) > self.capacity:
            del self._entries[: len(self._entries) - self.capacity]
        return self

    def _stack(self, idx: int) -> np.ndarray:
        if not self._entries:
            return np.zeros((0, self.feature_dim), dtype=np.float64)
        return np.stack([e[idx] for e in self._entries])

    def snapshot(self) -> tuple[np.ndarray, np.ndarray, tuple[MultiHotLabel, ...]]:
        """Immutable copy of the queue state in FIFO order: (U, V, labels)."""
        return self._stack(0), self._stack(1), tuple(e[2] for e in self._entries)

    def snapshot_u(self) -> tuple[np.ndarray, tuple[MultiHotLabel, ...]]:
        return self._stack(0), tuple(e[2] for e in self._entries)

    def snapshot_v(self) -> tuple[np.ndarray, tuple[MultiHotLabel, ...]]:
        return self._stack(1), tuple(e[2] for e in self._entries)

    def label_matrix(self) -> np.ndarray:
        if not self._entries:
            return np.zeros((0, 0), dtype=np.float64)
        return labels_to_matrix(e[2] for e in self._entries)
