"""Run configuration: nested defaults, JSON file loading, dotted overrides."""

from __future__ import annotations

import copy
import json

DEFAULT_CONFIG = {
    "data": {
        "records": 5000,
        "latent_classes": 16,
        "normal_classes": 4,
        "noise_scale": 0.25,
        "augment_noise": 0.1,
        "image_dim": 32,
        "target_mle": 0.12,
        "mode": "fast",
        "max_text_len": 100,
        "eval_fraction": 0.2,
        "seed": None,
        "vocab_path": None,
        "rules_path": None,
    },
    "model": {
        "hidden_dim": 64,
        "proj_dim": 64,
        "text_hash_dim": 256,
        "ngram_orders": [1, 2],
    },
    "loss": {
        "tau_init": 0.07,
        "tau_min": 0.01,
        "tau_max": 1.0,
        "variant": "sa_be",
    },
    "queue": {
        "capacity": 192,
        "momentum": 0.75,
    },
    "optimizer": {
        "lr": 3e-5,
        "beta1": 0.9,
        "beta2": 0.98,
        "eps": 1e-6,
        "weight_decay": 0.001,
    },
    "experiment": {
        "seed": 0,
        "epochs": 30,
        "batch_size": 64,
        "eval_batch_size": 32,
        "eval_rounds": 4,
        "mle_targets": [0.05, 0.075, 0.1, 0.125, 0.15],
        "seeds": [0, 1, 2, 3, 4],
        "variants": ["infonce", "sa", "sa_be"],
    },
}

VARIANTS = ("infonce", "sa", "sa_be")


def default_config() -> dict:
    return copy.deepcopy(DEFAULT_CONFIG)


def _deep_update(base: dict, extra: dict) -> dict:
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def load_config(path=None) -> dict:
    """Defaults, deep-merged with an optional JSON config file."""
    cfg = default_config()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            _deep_update(cfg, json.load(fh))
    return cfg


def apply_override(cfg: dict, assignment: str) -> dict:
    """Apply one KEY=VALUE override; KEY is a dotted path, VALUE parses as JSON."""
    if "=" not in assignment:
        raise ValueError(f"override must look like section.key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            node[part] = {}
        node = node[part]
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node[parts[-1]] = value
    return cfg


def config_json(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True, ensure_ascii=False)
