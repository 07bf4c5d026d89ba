"""Toy dual-tower encoders with exact backpropagation and momentum clones.

Each tower is a one-hidden-layer tanh extractor followed by a
linear-tanh-linear projection head. Shapes are deliberately small; the
point is exact, finite-difference-verifiable gradients, not capacity.
Momentum copies are blended towards the online parameters each step and
are never updated by gradients.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .numerics import ensure_matrix, ensure_vector, l2_normalize


@dataclass
class EncoderParams:
    """Weights of one tower: extractor (input->hidden) and projection (hidden->proj)."""

    extract_w: np.ndarray  # (hidden, input)
    extract_b: np.ndarray  # (hidden,)
    proj_w1: np.ndarray    # (proj, hidden)
    proj_b1: np.ndarray    # (proj,)
    proj_w2: np.ndarray    # (proj, proj)
    proj_b2: np.ndarray    # (proj,)

    FIELDS = ("extract_w", "extract_b", "proj_w1", "proj_b1", "proj_w2", "proj_b2")

    @property
    def input_dim(self) -> int:
        return self.extract_w.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.extract_w.shape[0]

    @property
    def proj_dim(self) -> int:
        return self.proj_w2.shape[0]

    def named(self):
        """(name, array) pairs in a fixed order."""
        return [(name, getattr(self, name)) for name in self.FIELDS]

    def copy(self) -> "EncoderParams":
        return EncoderParams(*(getattr(self, name).copy() for name in self.FIELDS))

    def zeros_like(self) -> "EncoderParams":
        return EncoderParams(*(np.zeros_like(getattr(self, name)) for name in self.FIELDS))

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, proj_dim: int,
             rng: np.random.Generator) -> "EncoderParams":
        """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer."""
        def layer(rows, cols):
            bound = 1.0 / np.sqrt(cols)
            w = rng.uniform(-bound, bound, size=(rows, cols))
            b = rng.uniform(-bound, bound, size=rows)
            return w, b

        ew, eb = layer(hidden_dim, input_dim)
        p1w, p1b = layer(proj_dim, hidden_dim)
        p2w, p2b = layer(proj_dim, proj_dim)
        return cls(ew, eb, p1w, p1b, p2w, p2b)


@dataclass
class EncoderPair:
    """Online image and text towers; projection widths must agree."""

    image: EncoderParams
    text: EncoderParams

    def __post_init__(self):
        if self.image.proj_dim != self.text.proj_dim:
            raise ValueError("image and text towers must share the projection width")

    def named(self):
        return [(f"image.{n}", a) for n, a in self.image.named()] + [
            (f"text.{n}", a) for n, a in self.text.named()
        ]

    def copy(self) -> "EncoderPair":
        return EncoderPair(self.image.copy(), self.text.copy())


@dataclass
class MomentumPair:
    """Slow-moving clones of the online pair, blended by coefficient m."""

    image: EncoderParams
    text: EncoderParams
    m: float
    t: int = 0

    @classmethod
    def init_from(cls, pair: EncoderPair, m: float) -> "MomentumPair":
        if not (0.0 <= m < 1.0):
            raise ValueError(f"momentum coefficient must lie in [0, 1), got {m}")
        return cls(pair.image.copy(), pair.text.copy(), m, 0)


def momentum_update(online: EncoderPair, mom: MomentumPair) -> MomentumPair:
    """p' <- m * p' + (1 - m) * p for every parameter, modality-wise."""
    def blend(slow: EncoderParams, fast: EncoderParams) -> EncoderParams:
        arrays = []
        for (name, s), (_, f) in zip(slow.named(), fast.named()):
            if s.shape != f.shape:
                raise ValueError(f"shape mismatch on {name}: {s.shape} vs {f.shape}")
            arrays.append(mom.m * s + (1.0 - mom.m) * f)
        return EncoderParams(*arrays)

    return MomentumPair(
        blend(mom.image, online.image),
        blend(mom.text, online.text),
        mom.m,
        mom.t + 1,
    )


@dataclass
class ForwardTape:
    """Activations recorded by forward, consumed by backward."""

    x: np.ndarray  # (B, input)
    h: np.ndarray  # (B, hidden), post-tanh
    g: np.ndarray  # (B, proj), post-tanh


def forward_batch(p: EncoderParams, X) -> tuple[np.ndarray, ForwardTape]:
    """Projected features for a batch of row-vector inputs."""
    X = ensure_matrix(X, "X")
    if X.shape[1] != p.input_dim:
        raise ValueError(f"expected input dim {p.input_dim}, got {X.shape[1]}")
    H = np.tanh(X @ p.extract_w.T + p.extract_b)
    G = np.tanh(H @ p.proj_w1.T + p.proj_b1)
    F = G @ p.proj_w2.T + p.proj_b2
    return F, ForwardTape(X, H, G)


def forward(p: EncoderParams, x) -> tuple[np.ndarray, ForwardTape]:
    """Single-vector forward; batching is a map over this."""
    x = ensure_vector(x, "x")
    F, tape = forward_batch(p, x[None, :])
    return F[0], tape


def extractor_features(p: EncoderParams, X) -> np.ndarray:
    """Hidden-layer features, the representation used for downstream probing."""
    X = ensure_matrix(X, "X")
    if X.shape[1] != p.input_dim:
        raise ValueError(f"expected input dim {p.input_dim}, got {X.shape[1]}")
    return np.tanh(X @ p.extract_w.T + p.extract_b)


def backward_batch(p: EncoderParams, tape: ForwardTape, dF) -> EncoderParams:
    """Exact parameter gradients, contracted with the feature cotangent dF."""
    dF = ensure_matrix(dF, "dF") if np.ndim(dF) == 2 else np.asarray(dF, dtype=np.float64)
    if dF.shape != (tape.x.shape[0], p.proj_dim):
        raise ValueError(f"cotangent shape {dF.shape} does not match tape/params")
    d_proj_w2 = dF.T @ tape.g
    d_proj_b2 = dF.sum(axis=0)
    dG = dF @ p.proj_w2
    dA = dG * (1.0 - tape.g**2)
    d_proj_w1 = dA.T @ tape.h
    d_proj_b1 = dA.sum(axis=0)
    dH = dA @ p.proj_w1
    dPre = dH * (1.0 - tape.h**2)
    d_extract_w = dPre.T @ tape.x
    d_extract_b = dPre.sum(axis=0)
    return EncoderParams(d_extract_w, d_extract_b, d_proj_w1, d_proj_b1, d_proj_w2, d_proj_b2)


def backward(p: EncoderParams, tape: ForwardTape, grad_feature) -> EncoderParams:
    """Single-vector backward matching forward()."""
    g = ensure_vector(grad_feature, "grad_feature")
    return backward_batch(p, tape, g[None, :])


@dataclass
class TextFeaturizer:
    """Deterministic character n-gram hashing into a fixed-width count vector.

    The same string always maps to the same L2-normalized vector, across
    processes and platforms (the hash is keyed content hashing, not the
    interpreter's randomized hash).
    """

    hash_dim: int = 256
    orders: tuple = (1, 2)
    _bucket_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def _bucket(self, gram: str) -> int:
        cached = self._bucket_cache.get(gram)
        if cached is None:
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
            cached = int.from_bytes(digest, "big") % self.hash_dim
            self._bucket_cache[gram] = cached
        return cached

    def featurize(self, text: str) -> np.ndarray:
        counts = np.zeros(self.hash_dim, dtype=np.float64)
        for order in self.orders:
            for i in range(len(text) - order + 1):
                counts[self._bucket(text[i : i + order])] += 1.0
        return l2_normalize(counts) if counts.any() else counts

    def featurize_batch(self, texts) -> np.ndarray:
        return np.stack([self.featurize(t) for t in texts])


def featurize_text(text: str, featurizer: TextFeaturizer) -> np.ndarray:
    return featurizer.featurize(text)
