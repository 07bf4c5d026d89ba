"""Label vocabulary, multi-hot labels, label similarity, and mean label entropy.

Label similarity is the cosine of two binary category vectors with the
"others" coordinate dropped; if either reduced vector is zero the similarity
is defined as 0, which makes others-only samples negatives against everyone.
Mean label entropy (mLE) is the average per-category binary entropy of the
marginal positive rates, in nats, over all categories including "others".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .numerics import ensure_matrix


def _data_text(filename: str) -> str:
    return resources.files("wsc.data").joinpath(filename).read_text(encoding="utf-8")


class LabelVocabulary:
    """Ordered category names with designated 'normal' and 'others' indices.

    File format: UTF-8 text, one category name per line, bit order equals
    file order. A ``#normal`` or ``#others`` directive after the name binds
    the special index. Blank lines are skipped.
    """

    def __init__(self, categories, normal_index: int, others_index: int):
        self.categories = tuple(str(c) for c in categories)
        self.normal_index = int(normal_index)
        self.others_index = int(others_index)
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("category names must be unique")
        n = len(self.categories)
        if not (0 <= self.normal_index < n and 0 <= self.others_index < n):
            raise ValueError("special indices out of range")
        if self.normal_index == self.others_index:
            raise ValueError("normal and others must be distinct categories")

    @property
    def c_total(self) -> int:
        return len(self.categories)

    def index(self, name: str) -> int:
        try:
            return self.categories.index(name)
        except ValueError:
            raise KeyError(f"unknown category: {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.categories

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabelVocabulary)
            and self.categories == other.categories
            and self.normal_index == other.normal_index
            and self.others_index == other.others_index
        )

    def __hash__(self):
        return hash((self.categories, self.normal_index, self.others_index))

    def __repr__(self):
        return f"LabelVocabulary({self.c_total} categories)"

    @classmethod
    def from_lines(cls, lines) -> "LabelVocabulary":
        names, normal, others = [], None, None
        for raw in lines:
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            name = parts[0]
            for directive in parts[1:]:
                if directive == "#normal":
                    normal = len(names)
                elif directive == "#others":
                    others = len(names)
                else:
                    raise ValueError(f"unknown vocabulary directive: {directive!r}")
            names.append(name)
        if normal is None or others is None:
            raise ValueError("vocabulary file must bind both #normal and #others")
        return cls(names, normal, others)

    @classmethod
    def from_file(cls, path) -> "LabelVocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def default(cls) -> "LabelVocabulary":
        return cls.from_lines(_data_text("vocabulary.txt").splitlines())


class MultiHotLabel:
    """Binary category vector over a fixed vocabulary."""

    __slots__ = ("vocab", "bits")

    def __init__(self, vocab: LabelVocabulary, bits):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.shape != (vocab.c_total,):
            raise ValueError(f"expected {vocab.c_total} bits, got shape {arr.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("label bits must be 0 or 1")
        self.vocab = vocab
        self.bits = arr
        self.bits.flags.writeable = False

    @classmethod
    def from_names(cls, vocab: LabelVocabulary, names) -> "MultiHotLabel":
        bits = np.zeros(vocab.c_total, dtype=np.uint8)
        for name in names:
            bits[vocab.index(name)] = 1
        return cls(vocab, bits)

    @classmethod
    def others_only(cls, vocab: LabelVocabulary) -> "MultiHotLabel":
        bits = np.zeros(vocab.c_total, dtype=np.uint8)
        bits[vocab.others_index] = 1
        return cls(vocab, bits)

    def names(self) -> tuple:
        return tuple(c for c, b in zip(self.vocab.categories, self.bits) if b)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiHotLabel)
            and self.vocab == other.vocab
            and bool(np.array_equal(self.bits, other.bits))
        )

    def __hash__(self):
        return hash((self.vocab, self.bits.tobytes()))

    def __repr__(self):
        return f"MultiHotLabel({list(self.names())!r})"


def _check_shared_vocab(a: MultiHotLabel, b: MultiHotLabel) -> None:
    if a.vocab != b.vocab:
        raise ValueError("labels use different vocabularies")


def label_similarity(yi: MultiHotLabel, yj: MultiHotLabel) -> float:
    """Cosine of the two bit vectors with the others coordinate removed.

    Returns 0 when either reduced vector is all-zero. Output lies in [0, 1]
    because entries are non-negative.
    """
    _check_shared_vocab(yi, yj)
    keep = np.arange(yi.vocab.c_total) != yi.vocab.others_index
    a = yi.bits[keep].astype(np.float64)
    b = yj.bits[keep].astype(np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(min(1.0, np.dot(a, b) / (na * nb)))


def pairwise_label_similarity(Y, Yp) -> np.ndarray:
    """Matrix S with S[i, j] = label_similarity(Y[i], Yp[j])."""
    Y = list(Y)
    Yp = list(Yp)
    if not Y or not Yp:
        return np.zeros((len(Y), len(Yp)), dtype=np.float64)
    vocab = Y[0].vocab
    for y in Y + Yp:
        if y.vocab != vocab:
            raise ValueError("labels use different vocabularies")
    keep = np.arange(vocab.c_total) != vocab.others_index
    A = np.stack([y.bits[keep] for y in Y]).astype(np.float64)
    B = np.stack([y.bits[keep] for y in Yp]).astype(np.float64)
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    # Zero-norm rows divide by 1 and contribute zero dot products anyway.
    S = (A / np.maximum(na, 1.0)[:, None]) @ (B / np.maximum(nb, 1.0)[:, None]).T
    return np.clip(S, 0.0, 1.0)


@dataclass(frozen=True)
class MarginalStats:
    """Per-category positive counts over a record collection."""

    counts: np.ndarray
    total: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if self.total <= 0:
            raise ValueError("total must be positive")
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-D array")
        if np.any(counts < 0) or np.any(counts > self.total):
            raise ValueError("each count must lie in [0, total]")

    @property
    def rates(self) -> np.ndarray:
        return self.counts / float(self.total)

    @classmethod
    def from_labels(cls, labels) -> "MarginalStats":
        labels = list(labels)
        if not labels:
            raise ValueError("need at least one label")
        bits = np.stack([y.bits for y in labels]).astype(np.int64)
        return cls(bits.sum(axis=0), len(labels))


def binary_entropy(p: np.ndarray) -> np.ndarray:
    """Elementwise -[p ln p + (1-p) ln(1-p)] with 0*ln(0) := 0."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    for q in (p, 1.0 - p):
        mask = q > 0.0
        out[mask] -= q[mask] * np.log(q[mask])
    return out


def mean_label_entropy(stats: MarginalStats, vocab: LabelVocabulary | None = None) -> float:
    """Average binary entropy of category marginals, natural log.

    Averages over every category, "others" included. When a vocabulary is
    given it must match the stats width.
    """
    c = stats.counts.size
    if vocab is not None and vocab.c_total != c:
        raise ValueError(f"stats cover {c} categories but vocabulary has {vocab.c_total}")
    return float(binary_entropy(stats.rates).sum() / c)


def mean_label_entropy_of_rates(rates) -> float:
    """mean_label_entropy for already-normalized marginal rates in [0, 1]."""
    p = np.asarray(rates, dtype=np.float64)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("rates must be a non-empty 1-D array within [0, 1]")
    return float(binary_entropy(p).sum() / p.size)


def reference_corpus_stats() -> tuple[MarginalStats, LabelVocabulary]:
    """Bundled per-category counts of the reference corpus, vocabulary-ordered."""
    vocab = LabelVocabulary.default()
    payload = json.loads(_data_text("corpus_counts.json"))
    counts = np.array([payload["counts"][name] for name in vocab.categories], dtype=np.int64)
    return MarginalStats(counts, int(payload["total_records"])), vocab


def labels_to_matrix(labels) -> np.ndarray:
    """Stack label bit vectors into an items x categories float matrix."""
    labels = list(labels)
    if not labels:
        raise ValueError("need at least one label")
    return ensure_matrix(np.stack([y.bits for y in labels]).astype(np.float64))
