"""Weighted similarity coupling loss, analytic gradients, and queue variants.

The in-batch loss treats each sample's own pair as the positive and every
other pair as a negative whose exponential similarity is weighted by
(1 - label similarity): identical-label pairs drop out of the denominator
entirely, partially similar pairs are pushed apart more slowly, and with
all label similarities zero the loss is exactly the row-wise softmax
cross-entropy used by standard dual-encoder contrastive training.

The queue variant scores the current batch against a memory of
momentum-encoded features; the positive term comes from the current pair's
momentum-encoded counterpart, while the weighted sum ranges over the whole
queue occupancy.

Gradient conventions: all *_grad_* functions return dL/d(argument), i.e.
the ascent direction is the negation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import ensure_matrix, exp_scaled

DIRECTIONS = ("i2t", "t2i")


@dataclass
class Temperature:
    """Learnable temperature, parameterized as log(1/tau) with hard clamping."""

    log_inv_tau: float
    tau_min: float = 0.01
    tau_max: float = 1.0

    @classmethod
    def from_tau(cls, tau: float, tau_min: float = 0.01, tau_max: float = 1.0) -> "Temperature":
        if not (tau_min <= tau <= tau_max):
            raise ValueError(f"tau={tau} outside [{tau_min}, {tau_max}]")
        return cls(-math.log(tau), tau_min, tau_max)

    @property
    def tau(self) -> float:
        return float(np.clip(math.exp(-self.log_inv_tau), self.tau_min, self.tau_max))

    def dtau_dparam(self) -> float:
        """d tau / d log_inv_tau; zero while the clamp is active."""
        raw = math.exp(-self.log_inv_tau)
        if raw < self.tau_min or raw > self.tau_max:
            return 0.0
        return -raw


def _check_square(z, s):
    z = ensure_matrix(z, "z")
    s = ensure_matrix(s, "s")
    if z.shape[0] != z.shape[1]:
        raise ValueError(f"z must be square, got {z.shape}")
    if s.shape != z.shape:
        raise ValueError(f"s shape {s.shape} does not match z shape {z.shape}")
    if np.any(np.abs(z) > 1.0 + 1e-9):
        raise ValueError("z entries must lie in [-1, 1]")
    if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-9):
        raise ValueError("s entries must lie in [0, 1]")
    return z, s


@dataclass
class SimilarityBundle:
    """Paired feature cosines z, label similarities s, and sigma = exp(z/tau)."""

    z: np.ndarray
    s: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        z, s = _check_square(self.z, self.s)
        sigma = ensure_matrix(self.sigma, "sigma")
        if sigma.shape != z.shape:
            raise ValueError("sigma shape does not match z")
        if np.any(sigma <= 0.0):
            raise ValueError("sigma entries must be positive")
        self.z, self.s, self.sigma = z, s, sigma

    @classmethod
    def build(cls, z, s, tau: float) -> "SimilarityBundle":
        z, s = _check_square(z, s)
        return cls(z, s, exp_scaled(z, tau))

    @property
    def batch_size(self) -> int:
        return self.z.shape[0]


def _offdiag_weights(s: np.ndarray) -> np.ndarray:
    w = 1.0 - s
    np.fill_diagonal(w, 0.0)
    return w


def _denominators(bundle: SimilarityBundle, direction: str) -> np.ndarray:
    """Per-row denominator: own sigma plus the weighted off-diagonal sum."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    w = _offdiag_weights(bundle.s)
    sig = bundle.sigma if direction == "i2t" else bundle.sigma.T
    return np.diag(bundle.sigma) + (w * sig).sum(axis=1)


def wsc_loss(bundle: SimilarityBundle, direction: str = "i2t") -> float:
    """Mean negative log of sigma_ii over its weighted denominator; >= 0."""
    d = _denominators(bundle, direction)
    return float(np.mean(np.log(d) - np.log(np.diag(bundle.sigma))))


def wsc_grad_sigma(bundle: SimilarityBundle, direction: str = "i2t") -> np.ndarray:
    """Closed-form dL/d sigma for one direction, as a full B x B matrix."""
    n = bundle.batch_size
    w = _offdiag_weights(bundle.s)
    d = _denominators(bundle, direction)
    sig_diag = np.diag(bundle.sigma)
    if direction == "i2t":
        grad = w / d[:, None] / n
    else:
        # sigma[a, b] feeds row b's denominator with weight w[b, a]
        grad = w.T / d[None, :] / n
    diag = -(1.0 / sig_diag - 1.0 / d) / n
    np.fill_diagonal(grad, diag)
    return grad


def in_batch_losses_and_grads(bundle: SimilarityBundle, tau: float):
    """Both directional losses plus gradients w.r.t. z and tau.

    Returns (loss_i2t, loss_t2i, dz, dtau) where dz accumulates both
    directions through sigma = exp(z/tau).
    """
    l_i2t = wsc_loss(bundle, "i2t")
    l_t2i = wsc_loss(bundle, "t2i")
    d_sigma = wsc_grad_sigma(bundle, "i2t") + wsc_grad_sigma(bundle, "t2i")
    dz = d_sigma * bundle.sigma / tau
    dtau = -float((bundle.z * dz).sum()) / tau
    return l_i2t, l_t2i, dz, dtau


@dataclass
class QueueSimilarityBundle:
    """Current-pair momentum similarities plus batch-vs-queue similarity grids."""

    z_pos: np.ndarray    # (B,) current pair vs its momentum-encoded counterpart
    z_queue: np.ndarray  # (B, N_q)
    s_queue: np.ndarray  # (B, N_q)

    def __post_init__(self):
        z_pos = np.asarray(self.z_pos, dtype=np.float64)
        if z_pos.ndim != 1 or z_pos.size == 0:
            raise ValueError("z_pos must be a non-empty 1-D array")
        b = z_pos.size
        z_queue = np.asarray(self.z_queue, dtype=np.float64).reshape(b, -1)
        s_queue = np.asarray(self.s_queue, dtype=np.float64).reshape(b, -1)
        if z_queue.shape != s_queue.shape:
            raise ValueError("z_queue and s_queue shapes must match")
        for name, arr in (("z_pos", z_pos), ("z_queue", z_queue)):
            if arr.size and np.any(np.abs(arr) > 1.0 + 1e-9):
                raise ValueError(f"{name} entries must lie in [-1, 1]")
        if s_queue.size and (np.any(s_queue < -1e-12) or np.any(s_queue > 1.0 + 1e-9)):
            raise ValueError("s_queue entries must lie in [0, 1]")
        self.z_pos, self.z_queue, self.s_queue = z_pos, z_queue, s_queue

    @property
    def batch_size(self) -> int:
        return self.z_pos.size

    @property
    def occupancy(self) -> int:
        return self.z_queue.shape[1]


def momentum_wsc_loss(qbundle: QueueSimilarityBundle, tau: float) -> float:
    """Queue-expanded coupling loss; an empty queue contributes zero (warm-up)."""
    if qbundle.occupancy == 0:
        return 0.0
    sig_pos = exp_scaled(qbundle.z_pos, tau)
    sig_q = exp_scaled(qbundle.z_queue, tau)
    d = sig_pos + ((1.0 - qbundle.s_queue) * sig_q).sum(axis=1)
    return float(np.mean(np.log(d) - np.log(sig_pos)))


def momentum_wsc_grads(qbundle: QueueSimilarityBundle, tau: float):
    """Loss plus gradients w.r.t. z_pos, z_queue, and tau for one direction."""
    b = qbundle.batch_size
    if qbundle.occupancy == 0:
        return 0.0, np.zeros(b), np.zeros_like(qbundle.z_queue), 0.0
    sig_pos = exp_scaled(qbundle.z_pos, tau)
    sig_q = exp_scaled(qbundle.z_queue, tau)
    w = 1.0 - qbundle.s_queue
    d = sig_pos + (w * sig_q).sum(axis=1)
    loss = float(np.mean(np.log(d) - np.log(sig_pos)))
    d_sig_pos = (1.0 / d - 1.0 / sig_pos) / b
    d_sig_q = w / d[:, None] / b
    dz_pos = d_sig_pos * sig_pos / tau
    dz_q = d_sig_q * sig_q / tau
    dtau = -(float((qbundle.z_pos * dz_pos).sum()) + float((qbundle.z_queue * dz_q).sum())) / tau
    return loss, dz_pos, dz_q, dtau


def total_loss(in_batch_i2t: float, in_batch_t2i: float,
               mom_i2t: float, mom_t2i: float) -> float:
    """Plain sum of the four objective terms."""
    return float(in_batch_i2t) + float(in_batch_t2i) + float(mom_i2t) + float(mom_t2i)
