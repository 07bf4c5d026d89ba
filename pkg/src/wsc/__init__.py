"""Label-weighted contrastive pre-training at desk scale.

A dual-encoder trainer whose contrastive objective weights every negative
by one minus its label similarity, momentum encoders with bounded FIFO
memory queues for batch expansion, a rule-based converter from diagnostic
text reports to multi-hot labels, and the metric kit to evaluate it all.
"""

__version__ = "0.1.0"

from .labels import (
    LabelVocabulary,
    MarginalStats,
    MultiHotLabel,
    label_similarity,
    mean_label_entropy,
    pairwise_label_similarity,
    reference_corpus_stats,
)
from .loss import (
    QueueSimilarityBundle,
    SimilarityBundle,
    Temperature,
    momentum_wsc_loss,
    total_loss,
    wsc_grad_sigma,
    wsc_loss,
)
from .memqueue import MemoryQueue
from .reportconv import Report, RuleSet, convert
from .synth import Dataset, GeneratorConfig, calibrate_mle, generate_dataset

__all__ = [
    "__version__",
    "LabelVocabulary",
    "MarginalStats",
    "MultiHotLabel",
    "label_similarity",
    "mean_label_entropy",
    "pairwise_label_similarity",
    "reference_corpus_stats",
    "QueueSimilarityBundle",
    "SimilarityBundle",
    "Temperature",
    "momentum_wsc_loss",
    "total_loss",
    "wsc_grad_sigma",
    "wsc_loss",
    "MemoryQueue",
    "Report",
    "RuleSet",
    "convert",
    "Dataset",
    "GeneratorConfig",
    "calibrate_mle",
    "generate_dataset",
]
