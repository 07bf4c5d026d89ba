"""Dense float64 vector/matrix primitives shared by every other module.

All public operations validate finiteness and return fresh float64 arrays,
so callers can treat results as immutable values. Cosine outputs are clamped
to [-1, 1] to keep downstream temperature-scaled exponentials bounded.
"""

from __future__ import annotations

import numpy as np

NORM_EPS = 1e-12


def ensure_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def ensure_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def l2_normalize(v, eps: float = NORM_EPS) -> np.ndarray:
    """Return v / max(||v||_2, eps); zero vectors map to zero."""
    arr = ensure_vector(v)
    return arr / max(float(np.linalg.norm(arr)), eps)


def l2_normalize_rows(m, eps: float = NORM_EPS) -> np.ndarray:
    """Row-wise l2_normalize of a matrix."""
    arr = ensure_matrix(m)
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    return arr / np.maximum(norms, eps)


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    Raises on dimension mismatch or zero-norm input; label-side zero handling
    is the label module's concern, not this layer's.
    """
    a = ensure_vector(u, "u")
    b = ensure_vector(v, "v")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm input")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def pairwise_cosine(U, V) -> np.ndarray:
    """All-pairs cosine matrix between rows of U (B x d) and V (B' x d)."""
    a = ensure_matrix(U, "U")
    b = ensure_matrix(V, "V")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0.0):
        raise ValueError("U contains a zero-norm row")
    if np.any(nb == 0.0):
        raise ValueError("V contains a zero-norm row")
    z = (a / na[:, None]) @ (b / nb[:, None]).T
    return np.clip(z, -1.0, 1.0)


def exp_scaled(z, tau: float) -> np.ndarray:
    """Entrywise exp(z / tau). For |z| <= 1 outputs lie in [e^(-1/tau), e^(1/tau)]."""
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    arr = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("exp_scaled input contains non-finite entries")
    return np.exp(arr / tau)
