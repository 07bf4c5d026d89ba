"""Command-line entry point: convert, gendata, train, sweep, gradcheck, eval."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import apply_override, config_json, load_config
from .labels import LabelVocabulary, MarginalStats, mean_label_entropy
from .reportconv import RuleSet, convert, label_record, read_reports_jsonl
from .synth import generate_dataset
from .trainer import (
    Batch,
    build_rules,
    build_vocab,
    generator_config,
    grad_check,
    init_state,
    load_checkpoint,
    run_training,
    write_run_outputs,
    evaluate_state,
    batch_noise,
)
from .experiment import run_sweep

logger = logging.getLogger("wsc")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}

# Finite-difference checking is quadratic in parameter count; shrink the
# model unless the caller explicitly overrides these.
GRADCHECK_OVERRIDES = (
    "data.image_dim=8",
    "model.hidden_dim=6",
    "model.proj_dim=4",
    "model.text_hash_dim=16",
    "queue.capacity=8",
)


def _setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("WSC_LOG_LEVEL", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _effective_config(args) -> dict:
    cfg = load_config(args.config)
    for assignment in args.set or []:
        apply_override(cfg, assignment)
    if args.seed is not None:
        cfg["experiment"]["seed"] = int(args.seed)
    return cfg


def _add_common(parser) -> None:
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override experiment.seed")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="dotted-path config override, repeatable")


def cmd_convert(args) -> int:
    cfg = _effective_config(args)
    rules = RuleSet.from_file(args.rules) if args.rules else build_rules(cfg)
    vocab = LabelVocabulary.from_file(args.vocab) if args.vocab else build_vocab(cfg)
    rules.validate_against(vocab)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "labels.jsonl")
    converted = 0
    failed = 0
    max_len = int(cfg["data"]["max_text_len"])
    with open(args.input, encoding="utf-8") as src, \
            open(out_path, "w", encoding="utf-8") as dst:
        for lineno, report, err in read_reports_jsonl(src, max_len):
            if err is not None:
                failed += 1
                print(f"line {lineno}: {err}", file=sys.stderr)
                continue
            label = convert(report, rules, vocab)
            dst.write(label_record(report, label) + "\n")
            converted += 1
    if failed:
        print(f"{failed} line(s) failed, {converted} converted", file=sys.stderr)
    return 0 if converted > 0 else 2


def cmd_gendata(args) -> int:
    cfg = _effective_config(args)
    vocab = build_vocab(cfg)
    rules = build_rules(cfg) if cfg["data"]["mode"] == "consistency" else None
    dataset = generate_dataset(generator_config(cfg), vocab, rules=rules)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "dataset.jsonl"), "w", encoding="utf-8") as fh:
        for rec in dataset.records:
            fh.write(json.dumps({
                "id": rec.id,
                "class_id": rec.class_id,
                "text": rec.text,
                "bits": [int(b) for b in rec.label.bits],
                "image": [float(x) for x in rec.image],
            }, ensure_ascii=False, sort_keys=True) + "\n")
    stats = MarginalStats.from_labels(dataset.labels())
    meta = {
        "records": len(dataset),
        "mode": dataset.mode,
        "seed": dataset.seed,
        "target_mle": dataset.target_mle,
        "realized_mle": mean_label_entropy(stats, vocab),
        "marginals": [float(p) for p in dataset.marginals],
    }
    with open(os.path.join(args.out, "dataset_meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(args.out, "effective_config.json"), "w", encoding="utf-8") as fh:
        fh.write(config_json(cfg) + "\n")
    print(f"wrote {len(dataset)} records, realized mLE {meta['realized_mle']:.4f}")
    return 0


def cmd_train(args) -> int:
    cfg = _effective_config(args)
    result = run_training(cfg)
    write_run_outputs(args.out, cfg, result)
    print(json.dumps(result.final_eval, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    cfg = _effective_config(args)
    run_sweep(cfg, args.out)
    print(f"sweep written to {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    cfg = load_config(args.config)
    for assignment in GRADCHECK_OVERRIDES:
        apply_override(cfg, assignment)
    for assignment in args.set or []:
        apply_override(cfg, assignment)
    if args.seed is not None:
        cfg["experiment"]["seed"] = int(args.seed)
    seed = int(cfg["experiment"]["seed"])
    state = init_state(cfg)
    rng = np.random.Generator(np.random.PCG64(seed))
    b = int(args.batch_size)
    images = rng.standard_normal((b, state.pair.image.input_dim))
    texts = np.abs(rng.standard_normal((b, state.pair.text.input_dim)))
    labels = _random_labels(state.vocab, rng, b)
    if cfg["loss"]["variant"] == "sa_be":
        # warm the queue so both momentum terms participate
        qfeats = rng.standard_normal((5, state.pair.image.proj_dim))
        qfeats /= np.linalg.norm(qfeats, axis=1, keepdims=True)
        state.queue.push_batch(list(qfeats), list(qfeats[::-1]),
                               _random_labels(state.vocab, rng, 5))
    report = grad_check(state, Batch(images, texts, labels), epsilon=float(args.epsilon))
    print(f"max relative error {report.max_rel_error:.3e} (worst: {report.worst_param})")
    threshold = 1e-6
    if report.passed(threshold):
        print(f"PASS (threshold {threshold:g})")
        return 0
    print(f"FAIL (threshold {threshold:g})")
    return 1


def _random_labels(vocab, rng, n):
    from .labels import MultiHotLabel

    labels = []
    for _ in range(n):
        bits = np.zeros(vocab.c_total, dtype=np.uint8)
        k = int(rng.integers(1, 4))
        bits[rng.choice(vocab.c_total, size=k, replace=False)] = 1
        labels.append(MultiHotLabel(vocab, bits))
    return labels


def cmd_eval(args) -> int:
    state = load_checkpoint(args.checkpoint)
    cfg = state.config
    for assignment in args.set or []:
        apply_override(cfg, assignment)
    vocab = state.vocab
    rules = build_rules(cfg) if cfg["data"]["mode"] == "consistency" else None
    dataset = generate_dataset(generator_config(cfg), vocab, rules=rules)
    _, eval_ds = dataset.split(float(cfg["data"]["eval_fraction"]))
    images = eval_ds.image_matrix()
    texts = state.featurizer.featurize_batch(eval_ds.texts())
    metrics = evaluate_state(state, images, texts, eval_ds.labels(),
                             int(cfg["experiment"]["eval_batch_size"]))
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "eval_metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    # per-class zero-shot AUC with its figure
    from .evalkit import ScoreTable, auc
    from .labels import labels_to_matrix
    from .trainer import forward_batch, _normalize_rows
    from .synth import prompt_for_category

    u_hat, _ = _normalize_rows(forward_batch(state.pair.image, images)[0])
    prompts = state.featurizer.featurize_batch(
        [prompt_for_category(c) for c in vocab.categories])
    p_hat, _ = _normalize_rows(forward_batch(state.pair.text, prompts)[0])
    res = auc(ScoreTable(u_hat @ p_hat.T, labels_to_matrix(eval_ds.labels())))
    with open(os.path.join(args.out, "per_class_auc.csv"), "w", encoding="utf-8") as fh:
        fh.write("category,auc\n")
        for name, value in zip(vocab.categories, res["per_class"]):
            fh.write(f"{name},{'' if np.isnan(value) else f'{value:.6f}'}\n")
    from . import plots

    plots.render_class_auc_figure(vocab.categories, res["per_class"],
                                  os.path.join(args.out, "figures", "eval_auc.png"))
    print(json.dumps(metrics, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert report JSONL to label JSONL")
    _add_common(p)
    p.add_argument("--input", required=True, help="input JSONL: {id, text} per line")
    p.add_argument("--rules", default=None, help="rule file (JSON); bundled set by default")
    p.add_argument("--vocab", default=None, help="vocabulary file; bundled one by default")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("gendata", help="generate a synthetic dataset")
    _add_common(p)
    p.set_defaults(func=cmd_gendata)

    p = sub.add_parser("train", help="train one run")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="label-entropy sweep over variants and seeds")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full objective")
    _add_common(p)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--batch-size", type=int, default=3)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except Exception as err:  # surfaced as exit code, not traceback
        logger.error("%s", err)
        if os.environ.get("WSC_LOG_LEVEL", "").lower() == "debug":
            raise
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
