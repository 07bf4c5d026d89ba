"""Synthetic paired dataset with controllable mean label entropy.

Latent classes carry multi-hot labels sampled from a structured marginal
profile: a class is "normal" exclusively with probability pn, otherwise it
draws finding bits independently and falls back to "others" when none come
up. Images are class prototypes plus Gaussian noise; report texts are
assembled from per-category phrase templates that the bundled rule set
converts back to exactly the intended categories, so generated labels and
converted labels agree.

Calibration interpolates the profile between a normal-dominated endpoint
(many identical labels, low entropy) and a balanced endpoint, bisecting the
interpolation weight until the analytic mean label entropy of the induced
marginals hits the requested target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .labels import (
    LabelVocabulary,
    MultiHotLabel,
    MarginalStats,
    mean_label_entropy,
    mean_label_entropy_of_rates,
)
from .reportconv import Report, RuleSet, convert

# One tuple of report phrasings per category; every variant converts to
# exactly its own category under the bundled rules.
PHRASE_TEMPLATES = {
    "正常眼底": ("眼底未见明显异常", "双眼眼底正常", "眼底大致正常"),
    "白内障": ("白内障", "晶状体混浊", "双眼白内障"),
    "动脉硬化": ("动脉硬化", "视网膜动脉硬化改变", "动硬"),
    "糖尿病视网膜病变": ("糖网", "糖尿病视网膜病变", "DR改变"),
    "飞蚊症": ("飞蚊症", "自觉飞蚊感"),
    "近视": ("近视", "高度近视改变"),
    "老视": ("老视", "老花"),
    "青光眼": ("青光眼", "POAG"),
    "脉络膜视网膜病变": ("脉络膜视网膜病变", "脉络膜视网膜炎"),
    "出血": ("视网膜出血", "散在出血", "片状出血"),
    "交叉压迹": ("交叉压迹", "动静脉交叉压迫"),
    "豹纹眼底": ("豹纹眼底", "豹纹状眼底"),
    "动脉细": ("动静脉比小于2:3", "动脉变细", "视网膜动脉狭窄"),
    "玻璃体后脱离": ("玻璃体后脱离", "PVD"),
    "血管阻塞": ("血管阻塞", "静脉阻塞", "分支静脉阻塞"),
    "硬渗": ("硬渗", "硬性渗出", "散在硬性渗出"),
    "黄斑变性": ("黄斑变性", "AMD"),
    "大视杯": ("杯盘比大于0.5", "杯盘比约0.7", "视杯扩大"),
    "玻璃膜疣": ("玻璃膜疣", "drusen", "玻璃疣"),
    "萎缩弧": ("萎缩弧", "近视弧", "颞侧萎缩弧"),
    "新生血管": ("新生血管", "CNV"),
    "微动脉瘤": ("微动脉瘤", "微血管瘤"),
    "神经纤维层缺损": ("神经纤维层缺损", "RNFLD"),
    "视网膜脱离": ("视网膜脱离", "网脱"),
    "激光斑": ("激光斑", "光凝斑", "激光斑形成"),
    "色素上皮层脱离": ("色素上皮层脱离", "PED"),
    "脉络膜萎缩": ("脉络膜萎缩", "脈絡膜萎縮"),
    "模糊眼底": ("模糊眼底", "眼底模糊", "屈光介质混浊"),
    "黄斑区色素紊乱": ("黄斑区色素紊乱", "黄斑色素紊乱"),
    "棉絮斑": ("棉絮斑", "软性渗出", "棉绒斑"),
    "黄斑区皱褶": ("黄斑区皱褶", "黄斑皱褶"),
    "黄斑前膜": ("黄斑前膜", "ERM", "视网膜前膜"),
    "其他": ("视盘水肿", "玻璃体混浊"),
}

PHRASE_SEPARATOR = "，"

# Label-neutral phrases: they match no entity rule, so they diversify the
# text of same-label records without touching the converted label.
FLAVOR_PHRASES = ("双眼", "右眼", "左眼", "双眼检影")
QUALIFIER_PHRASES = ("", "后极部", "周边部", "视乳头旁", "颞侧", "鼻侧")


def prompt_for_category(category: str) -> str:
    """Canonical phrase used as the zero-shot class prompt."""
    return PHRASE_TEMPLATES[category][0]


def _bisect_monotone(f, target, lo=0.0, hi=1.0, tol=1e-3, max_iter=200):
    f_lo, f_hi = f(lo), f(hi)
    if not (min(f_lo, f_hi) - tol <= target <= max(f_lo, f_hi) + tol):
        raise ValueError(
            f"target {target} unreachable: endpoint values are {f_lo:.5f} and {f_hi:.5f}"
        )
    increasing = f_hi >= f_lo
    a, b = lo, hi
    x = (a + b) / 2.0
    for _ in range(max_iter):
        x = (a + b) / 2.0
        fx = f(x)
        if abs(fx - target) <= tol:
            return x
        if (fx < target) == increasing:
            a = x
        else:
            b = x
    fx = f(x)
    if abs(fx - target) > tol:
        raise ValueError(f"bisection stalled at {fx:.5f} for target {target}")
    return x


def calibrate_rates(target: float, low_rates, high_rates, tol: float = 1e-3) -> np.ndarray:
    """Bisect a linear interpolation of two marginal-rate vectors to a target mLE."""
    low = np.asarray(low_rates, dtype=np.float64)
    high = np.asarray(high_rates, dtype=np.float64)

    def f(alpha):
        return mean_label_entropy_of_rates((1 - alpha) * low + alpha * high)

    alpha = _bisect_monotone(f, target, tol=tol)
    return (1 - alpha) * low + alpha * high


@dataclass(frozen=True)
class CalibratedMarginals:
    """Generator marginals produced by calibrate_mle.

    normal_rate is the probability a record comes from a normal-only class;
    finding_rates are the per-category bit probabilities of finding classes;
    marginal_vector is the induced full per-category marginal (others
    included) whose mean label entropy is mle.
    """

    vocab: LabelVocabulary
    normal_rate: float
    finding_rates: np.ndarray
    marginal_vector: np.ndarray
    mle: float


def _profile_marginals(vocab: LabelVocabulary, pn: float, q: np.ndarray) -> np.ndarray:
    """Full marginal vector induced by the (normal-exclusive, findings, others) scheme."""
    marg = np.zeros(vocab.c_total)
    marg[vocab.normal_index] = pn
    finding_idx = [
        i for i in range(vocab.c_total) if i not in (vocab.normal_index, vocab.others_index)
    ]
    marg[finding_idx] = (1.0 - pn) * q
    marg[vocab.others_index] = (1.0 - pn) * float(np.prod(1.0 - q))
    return marg


def calibrate_mle(
    target: float,
    vocab: LabelVocabulary,
    pn_bounds: tuple = (0.82, 0.3),
    q_active_bounds: tuple = (0.35, 0.5),
    q_rare_bounds: tuple = (0.003, 0.5),
    active_findings: int = 3,
    tol: float = 1e-3,
) -> CalibratedMarginals:
    """Find generator marginals whose analytic mean label entropy hits target.

    Probability mass concentrates on the first active_findings finding
    categories: low-entropy datasets then put chunky shares on a few labels,
    so identical-label records co-occur within mini-batches, which is what
    makes low entropy adversarial for unweighted contrastive training.
    """
    n_findings = vocab.c_total - 2
    active = min(active_findings, n_findings)

    def rates(alpha):
        pn = (1 - alpha) * pn_bounds[0] + alpha * pn_bounds[1]
        q = np.full(n_findings, (1 - alpha) * q_rare_bounds[0] + alpha * q_rare_bounds[1])
        q[:active] = (1 - alpha) * q_active_bounds[0] + alpha * q_active_bounds[1]
        return pn, q

    def f(alpha):
        pn, q = rates(alpha)
        return mean_label_entropy_of_rates(_profile_marginals(vocab, pn, q))

    alpha = _bisect_monotone(f, target, tol=tol)
    pn, q = rates(alpha)
    marg = _profile_marginals(vocab, pn, q)
    return CalibratedMarginals(vocab, pn, q, marg, mean_label_entropy_of_rates(marg))


@dataclass
class GeneratorConfig:
    """Image model: every record is a shared base anatomy plus the summed
    offsets of its label's categories, a small class-specific quirk, and
    record noise. Same-label classes differ only by their quirks, so their
    pairs are semantically identical but never exactly equal."""

    size: int = 5000
    latent_classes: int = 16
    normal_classes: int = 4
    category_signal: float = 1.5
    class_quirk: float = 0.5
    noise_scale: float = 0.2
    image_dim: int = 32
    seed: int = 0
    target_mle: float | None = None
    normal_rate: float | None = None
    finding_rates: np.ndarray | None = None
    mode: str = "fast"  # "fast" or "consistency"
    max_text_len: int = 100

    def __post_init__(self):
        if self.latent_classes < 2:
            raise ValueError("need at least 2 latent classes")
        if not (1 <= self.normal_classes < self.latent_classes):
            raise ValueError("normal_classes must leave room for finding classes")
        if self.size < 1:
            raise ValueError("dataset size must be positive")
        if self.mode not in ("fast", "consistency"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class Record:
    id: str
    class_id: int
    image: np.ndarray
    text: str
    label: MultiHotLabel


@dataclass
class Dataset:
    records: list
    vocab: LabelVocabulary
    mode: str
    seed: int
    marginals: np.ndarray
    target_mle: float | None = None
    class_labels: tuple = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.records)

    def image_matrix(self) -> np.ndarray:
        return np.stack([r.image for r in self.records])

    def texts(self) -> list:
        return [r.text for r in self.records]

    def labels(self) -> list:
        return [r.label for r in self.records]

    def realized_mle(self) -> float:
        return mean_label_entropy(MarginalStats.from_labels(self.labels()), self.vocab)

    def split(self, eval_fraction: float) -> tuple["Dataset", "Dataset"]:
        """Head/tail split; records are exchangeable by construction."""
        n_eval = int(round(len(self.records) * eval_fraction))
        n_train = len(self.records) - n_eval
        if n_train < 1 or n_eval < 1:
            raise ValueError("split leaves an empty side")
        head = Dataset(self.records[:n_train], self.vocab, self.mode, self.seed,
                       self.marginals, self.target_mle, self.class_labels)
        tail = Dataset(self.records[n_train:], self.vocab, self.mode, self.seed,
                       self.marginals, self.target_mle, self.class_labels)
        return head, tail


def _resolve_marginals(cfg: GeneratorConfig, vocab: LabelVocabulary) -> CalibratedMarginals:
    if cfg.normal_rate is not None and cfg.finding_rates is not None:
        q = np.asarray(cfg.finding_rates, dtype=np.float64)
        if q.size != vocab.c_total - 2:
            raise ValueError(f"expected {vocab.c_total - 2} finding rates, got {q.size}")
        marg = _profile_marginals(vocab, cfg.normal_rate, q)
        return CalibratedMarginals(vocab, cfg.normal_rate, q, marg,
                                   mean_label_entropy_of_rates(marg))
    target = cfg.target_mle if cfg.target_mle is not None else 0.12
    return calibrate_mle(target, vocab)


def _sample_class_labels(rng, cal: CalibratedMarginals, n_normal: int,
                         n_finding: int) -> list[MultiHotLabel]:
    """Latent-class labels: n_normal normal-only classes, then n_finding classes
    drawing finding bits independently (falling back to others when none hit).

    Same-label collisions across classes are the point, not a defect; only a
    fully degenerate draw (a single distinct label overall) is resampled.
    """
    vocab = cal.vocab
    finding_idx = np.array([
        i for i in range(vocab.c_total) if i not in (vocab.normal_index, vocab.others_index)
    ])
    normal = MultiHotLabel.from_names(vocab, [vocab.categories[vocab.normal_index]])
    for _ in range(200):
        labels = [normal] * n_normal
        for _ in range(n_finding):
            bits = np.zeros(vocab.c_total, dtype=np.uint8)
            hits = rng.random(finding_idx.size) < cal.finding_rates
            if hits.any():
                bits[finding_idx[hits]] = 1
            else:
                bits[vocab.others_index] = 1
            labels.append(MultiHotLabel(vocab, bits))
        if len(set(labels)) >= 2:
            return labels
    raise ValueError("could not draw at least two distinct class labels; marginals degenerate")


def _assemble_text(label: MultiHotLabel, rng, max_len: int) -> tuple[str, tuple]:
    """Build a report from category templates; returns (text, kept category names)."""
    phrases = [FLAVOR_PHRASES[int(rng.integers(len(FLAVOR_PHRASES)))]]
    qualifier = QUALIFIER_PHRASES[int(rng.integers(len(QUALIFIER_PHRASES)))]
    if qualifier:
        phrases.append(qualifier)
    used = sum(len(p) for p in phrases) + len(PHRASE_SEPARATOR) * (len(phrases) - 1)
    cats = list(label.names())
    rng.shuffle(cats)
    kept = []
    for cat in cats:
        options = PHRASE_TEMPLATES[cat]
        phrase = options[int(rng.integers(len(options)))]
        extra = len(phrase) + len(PHRASE_SEPARATOR)
        if used + extra > max_len:
            continue
        phrases.append(phrase)
        kept.append(cat)
        used += extra
    if not kept:
        # budget exhausted before any category phrase fit; fall back hard
        phrase = PHRASE_TEMPLATES[label.vocab.categories[label.vocab.others_index]][0]
        return phrase, ()
    return PHRASE_SEPARATOR.join(phrases), tuple(kept)


def generate_dataset(
    cfg: GeneratorConfig,
    vocab: LabelVocabulary | None = None,
    rules: RuleSet | None = None,
) -> Dataset:
    """Deterministic synthetic dataset; identical config and seed give identical bytes."""
    vocab = vocab or LabelVocabulary.default()
    cal = _resolve_marginals(cfg, vocab)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0])))
    n_normal = cfg.normal_classes
    class_labels = _sample_class_labels(rng, cal, n_normal, cfg.latent_classes - n_normal)

    def scaled_direction(norm):
        v = rng.standard_normal(cfg.image_dim)
        return v * (norm / max(float(np.linalg.norm(v)), 1e-12))

    base = rng.standard_normal(cfg.image_dim)
    offsets = {c: scaled_direction(cfg.category_signal) for c in vocab.categories}
    prototypes = np.stack([
        base
        + sum((offsets[c] for c in label.names()), np.zeros(cfg.image_dim))
        + scaled_direction(cfg.class_quirk)
        for label in class_labels
    ])
    if cfg.mode == "consistency":
        rules = rules or RuleSet.default()
        rules.validate_against(vocab)

    records = []
    for i in range(cfg.size):
        if rng.random() < cal.normal_rate:
            k = int(rng.integers(n_normal))
        else:
            k = n_normal + int(rng.integers(cfg.latent_classes - n_normal))
        image = prototypes[k] + cfg.noise_scale * rng.standard_normal(cfg.image_dim)
        text, kept = _assemble_text(class_labels[k], rng, cfg.max_text_len)
        if cfg.mode == "consistency":
            label = convert(Report(str(i), text, cfg.max_text_len), rules, vocab)
        else:
            label = (
                MultiHotLabel.from_names(vocab, kept)
                if kept
                else MultiHotLabel.others_only(vocab)
            )
        records.append(Record(str(i), k, image, text, label))
    return Dataset(records, vocab, cfg.mode, cfg.seed, cal.marginal_vector,
                   cfg.target_mle, tuple(class_labels))
