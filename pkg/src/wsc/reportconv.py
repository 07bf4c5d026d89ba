"""Rule-driven converter from diagnostic-style text reports to multi-hot labels.

The pipeline: split a report into phrases, standardize abbreviations into
full terms (longest match first, left to right, single pass), drop phrases
matching filter patterns (advice and other content unrelated to the image),
extract entities with descriptors and numeric values, then apply decision
rules. Bits from all phrases of one report are unioned; a report that sets
no bit at all falls back to the "others" category.

Numeric decision rules use implication semantics: a rule (entity, cmp, thr)
fires when the reported assertion "x rel v" logically implies "x cmp thr".
So a report stating a ratio is above 0.5 satisfies a "> 0.5" rule, and so
does a report stating the ratio equals 0.7.

The ASCII period is split-guarded so decimals like 0.5 survive phrase
splitting; every other delimiter is a literal separator.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .labels import LabelVocabulary, MultiHotLabel

logger = logging.getLogger(__name__)

DEFAULT_MAX_TEXT_LEN = 100

COMPARATORS = ("<", ">", "<=", ">=", "present", "absent")

# Descriptor words mapped to the relation a phrase asserts about its value.
_REL_WORDS = {
    ">": ("大于", "超过", "高于", ">", "＞"),
    ">=": ("大于等于", "不小于", "不低于", "≥", ">="),
    "<": ("小于", "低于", "不足", "<", "＜"),
    "<=": ("小于等于", "不超过", "不大于", "≤", "<="),
}


@dataclass
class Report:
    """One text report; text longer than max_len is truncated on construction."""

    id: str
    text: str
    max_len: int = DEFAULT_MAX_TEXT_LEN

    def __post_init__(self):
        self.text = str(self.text)
        if len(self.text) > self.max_len:
            self.text = self.text[: self.max_len]


@dataclass(frozen=True)
class EntityMatch:
    name: str
    descriptor: str
    value: Fraction | None = None


@dataclass(frozen=True)
class PhraseAnalysis:
    phrase: str
    standardized: str
    entities: tuple[EntityMatch, ...]
    filtered: bool


@dataclass(frozen=True)
class Pattern:
    pattern: str
    regex: bool = False

    def compiled(self):
        return re.compile(self.pattern) if self.regex else None

    def search(self, text: str):
        if self.regex:
            return re.search(self.pattern, text)
        idx = text.find(self.pattern)
        if idx < 0:
            return None
        return _LiteralMatch(self.pattern)


class _LiteralMatch:
    def __init__(self, matched: str):
        self._matched = matched

    def group(self, *args):
        return self._matched


@dataclass(frozen=True)
class EntityRule:
    pattern: Pattern
    entity: str
    numeric: bool = False


@dataclass(frozen=True)
class DecisionRule:
    entity: str
    comparator: str
    threshold: Fraction | None
    category: str


def parse_ratio(text: str) -> Fraction:
    """Parse "0.5", "2:3", "2：3" or "2/3" into an exact rational."""
    s = str(text).strip()
    parts = re.split(r"\s*[:：/]\s*", s)
    if len(parts) == 1:
        return Fraction(parts[0])
    if len(parts) == 2:
        return Fraction(parts[0]) / Fraction(parts[1])
    raise ValueError(f"cannot parse ratio: {text!r}")


def _normalize_relation(descriptor: str) -> str:
    d = (descriptor or "").strip()
    for rel, words in _REL_WORDS.items():
        if d in words:
            return rel
    return "="


def _implies(rel: str, value: Fraction, cmp: str, thr: Fraction) -> bool:
    """Does the assertion "x rel value" imply "x cmp thr"?"""
    if cmp == ">":
        if rel == ">":
            return value >= thr
        if rel in (">=", "="):
            return value > thr
    elif cmp == ">=":
        if rel in (">", ">=", "="):
            return value >= thr
    elif cmp == "<":
        if rel == "<":
            return value <= thr
        if rel in ("<=", "="):
            return value < thr
    elif cmp == "<=":
        if rel in ("<", "<=", "="):
            return value <= thr
    return False


class RuleSet:
    """Immutable bundle of synonyms, delimiters, filters, entity and decision rules."""

    def __init__(self, synonyms, delimiters, filters, entity_rules, decision_rules):
        self.synonyms = tuple((str(a), str(b)) for a, b in synonyms)
        self.delimiters = tuple(str(d) for d in delimiters)
        self.filters = tuple(filters)
        self.entity_rules = tuple(entity_rules)
        self.decision_rules = tuple(decision_rules)
        # Longest surface first so abbreviations never clobber longer terms.
        self._surfaces = sorted(self.synonyms, key=lambda kv: len(kv[0]), reverse=True)
        self._split_re = self._build_split_regex(self.delimiters)
        self._validate_internal()

    @staticmethod
    def _build_split_regex(delimiters):
        parts = []
        for d in delimiters:
            if d == ".":
                parts.append(r"(?<!\d)\.(?!\d)")
            else:
                parts.append(re.escape(d))
        return re.compile("|".join(parts)) if parts else None

    def _validate_internal(self):
        for surface, _ in self.synonyms:
            if not surface:
                raise ValueError("empty synonym surface form")
        for rule in self.entity_rules:
            if rule.numeric and not rule.pattern.regex:
                raise ValueError(f"numeric entity rule {rule.entity!r} must be a regex")
            if rule.pattern.regex:
                compiled = re.compile(rule.pattern.pattern)
                if rule.numeric and "value" not in compiled.groupindex:
                    raise ValueError(
                        f"numeric entity rule {rule.entity!r} needs a (?P<value>...) group"
                    )
        for f in self.filters:
            if f.regex:
                re.compile(f.pattern)
        for rule in self.decision_rules:
            if rule.comparator not in COMPARATORS:
                raise ValueError(f"unknown comparator {rule.comparator!r}")
            if rule.comparator not in ("present", "absent") and rule.threshold is None:
                raise ValueError(f"decision rule on {rule.entity!r} needs a threshold")
        # One standardization pass must be a fixed point: no rewrite cycles.
        for _, standard in self.synonyms:
            again = standardize(standard, self)
            if again != standard:
                raise ValueError(
                    f"synonym target {standard!r} is rewritten to {again!r}; "
                    "rule set is not idempotent"
                )

    def validate_against(self, vocab: LabelVocabulary) -> None:
        for rule in self.decision_rules:
            if rule.category not in vocab:
                raise ValueError(f"decision rule targets unknown category {rule.category!r}")

    @classmethod
    def from_dict(cls, payload: dict) -> "RuleSet":
        synonyms = [(e["surface"], e["standard"]) for e in payload.get("synonyms", [])]
        delimiters = payload.get("delimiters", [])
        filters = [
            Pattern(e["pattern"], bool(e.get("regex", False)))
            for e in payload.get("filters", [])
        ]
        entity_rules = [
            EntityRule(
                Pattern(e["pattern"], bool(e.get("regex", False))),
                e["entity"],
                bool(e.get("numeric", False)),
            )
            for e in payload.get("entities", [])
        ]
        decision_rules = [
            DecisionRule(
                e["entity"],
                e["comparator"],
                parse_ratio(e["threshold"]) if e.get("threshold") is not None else None,
                e["category"],
            )
            for e in payload.get("decisions", [])
        ]
        return cls(synonyms, delimiters, filters, entity_rules, decision_rules)

    @classmethod
    def from_file(cls, path) -> "RuleSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def default(cls) -> "RuleSet":
        text = resources.files("wsc.data").joinpath("rules.json").read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))


def standardize(text: str, rules: RuleSet) -> str:
    """Replace synonym surface forms with their standard forms, longest first."""
    surfaces = rules._surfaces
    out = []
    i = 0
    n = len(text)
    while i < n:
        for surface, standard in surfaces:
            if text.startswith(surface, i):
                out.append(standard)
                i += len(surface)
                break
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def split_phrases(report: Report, rules: RuleSet) -> list[str]:
    """Split on the configured delimiters, dropping empty fragments."""
    if rules._split_re is None:
        fragments = [report.text]
    else:
        fragments = rules._split_re.split(report.text)
    return [frag.strip() for frag in fragments if frag.strip()]


def extract_entities(phrase: str, rules: RuleSet, original: str | None = None) -> PhraseAnalysis:
    """Extract entity matches from an already-standardized phrase.

    A phrase matching any filter pattern is marked filtered and carries no
    entities. A malformed numeric capture voids the whole phrase's entities.
    """
    source = original if original is not None else phrase
    for filt in rules.filters:
        if filt.search(phrase):
            return PhraseAnalysis(source, phrase, (), True)
    entities: list[EntityMatch] = []
    for rule in rules.entity_rules:
        if rule.pattern.regex:
            for m in re.finditer(rule.pattern.pattern, phrase):
                descriptor = ""
                value = None
                groups = m.groupdict()
                if "rel" in groups and groups["rel"]:
                    descriptor = groups["rel"]
                if rule.numeric:
                    raw = groups.get("value")
                    if raw is None:
                        continue
                    try:
                        value = parse_ratio(raw)
                    except (ValueError, ZeroDivisionError) as err:
                        logger.warning(
                            "malformed numeric capture %r in phrase %r: %s",
                            raw, phrase, err,
                        )
                        return PhraseAnalysis(source, phrase, (), False)
                if not descriptor:
                    descriptor = m.group(0)
                entities.append(EntityMatch(rule.entity, descriptor, value))
        else:
            m = rule.pattern.search(phrase)
            if m is not None:
                entities.append(EntityMatch(rule.entity, m.group(0)))
    return PhraseAnalysis(source, phrase, tuple(entities), False)


def decide_labels(analyses, rules: RuleSet, vocab: LabelVocabulary) -> MultiHotLabel:
    """Apply decision rules to all unfiltered entities and union the bits.

    Any report that ends up with no bit set maps to the others category.
    """
    live = [a for a in analyses if not a.filtered]
    entities = [e for a in live for e in a.entities]
    bits = [0] * vocab.c_total
    for rule in rules.decision_rules:
        matched = [e for e in entities if e.name == rule.entity]
        fire = False
        if rule.comparator == "present":
            fire = bool(matched)
        elif rule.comparator == "absent":
            fire = bool(live) and not matched
        else:
            for ent in matched:
                if ent.value is None:
                    continue
                rel = _normalize_relation(ent.descriptor)
                if _implies(rel, ent.value, rule.comparator, rule.threshold):
                    fire = True
                    break
        if fire:
            bits[vocab.index(rule.category)] = 1
    if not any(bits):
        bits[vocab.others_index] = 1
    return MultiHotLabel(vocab, bits)


def convert(report: Report, rules: RuleSet, vocab: LabelVocabulary) -> MultiHotLabel:
    """Full pipeline: split, standardize, extract, decide."""
    analyses = []
    for phrase in split_phrases(report, rules):
        std = standardize(phrase, rules)
        analyses.append(extract_entities(std, rules, original=phrase))
    return decide_labels(analyses, rules, vocab)


def read_reports_jsonl(lines, max_len: int = DEFAULT_MAX_TEXT_LEN):
    """Yield (lineno, Report-or-None, error-or-None) for each non-blank line."""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            yield lineno, Report(str(obj["id"]), str(obj["text"]), max_len), None
        except (json.JSONDecodeError, KeyError, TypeError) as err:
            yield lineno, None, f"{type(err).__name__}: {err}"


def label_record(report: Report, label: MultiHotLabel) -> str:
    """One output JSONL line for a converted report."""
    return json.dumps(
        {
            "id": report.id,
            "labels": list(label.names()),
            "bits": [int(b) for b in label.bits],
        },
        ensure_ascii=False,
    )
