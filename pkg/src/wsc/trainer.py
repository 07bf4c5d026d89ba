"""Training state, the full step, gradient checking, checkpoints, and the loop.

One step: encode the batch with the online towers, encode it with the
momentum towers, score it against the in-batch pairs and against the queue
snapshot taken before any push, sum the four loss terms, backpropagate
through both online towers and the temperature, apply the optimizer with
decoupled decay (biases and temperature excluded), blend the momentum
towers, and finally enqueue the momentum-encoded batch.

All per-step randomness (epoch shuffles, augmentation noise) is derived
functionally from (seed, epoch, step), which makes checkpoint resume at any
step bit-exact by construction.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import VARIANTS, config_json
from .encoders import (
    EncoderPair,
    EncoderParams,
    MomentumPair,
    TextFeaturizer,
    forward_batch,
    backward_batch,
    momentum_update,
)
from .evalkit import ScoreTable, auc, map_score, retrieval_metrics
from .labels import LabelVocabulary, MultiHotLabel, labels_to_matrix, pairwise_label_similarity
from .loss import (
    QueueSimilarityBundle,
    SimilarityBundle,
    Temperature,
    in_batch_losses_and_grads,
    momentum_wsc_grads,
    momentum_wsc_loss,
    total_loss,
    wsc_loss,
)
from .memqueue import MemoryQueue
from .optim import MomentOptimizer, OptimizerConfig
from .reportconv import RuleSet
from .synth import Dataset, GeneratorConfig, generate_dataset, prompt_for_category

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class Batch:
    images: np.ndarray
    text_feats: np.ndarray
    labels: list

    def __post_init__(self):
        if len(self.labels) != self.images.shape[0] or len(self.labels) != self.text_feats.shape[0]:
            raise ValueError("batch sides disagree in length")
        if len(self.labels) < 2:
            raise ValueError("batch size must be at least 2")


@dataclass
class StepMetrics:
    step: int
    loss_i2t: float
    loss_t2i: float
    loss_mom_i2t: float
    loss_mom_t2i: float
    loss_total: float
    tau: float
    queue_occupancy: int
    grad_norm: float
    queue_warmup: bool

    def to_dict(self) -> dict:
        return {
            "kind": "step",
            "step": self.step,
            "loss_i2t": self.loss_i2t,
            "loss_t2i": self.loss_t2i,
            "loss_mom_i2t": self.loss_mom_i2t,
            "loss_mom_t2i": self.loss_mom_t2i,
            "loss_total": self.loss_total,
            "tau": self.tau,
            "queue_occupancy": self.queue_occupancy,
            "grad_norm": self.grad_norm,
            "queue_warmup": self.queue_warmup,
        }


@dataclass
class TrainState:
    config: dict
    vocab: LabelVocabulary
    featurizer: TextFeaturizer
    pair: EncoderPair
    mom: MomentumPair
    temp: Temperature
    queue: MemoryQueue
    opt: MomentOptimizer
    t: int = 0
    rng: np.random.Generator = field(
        default_factory=lambda: np.random.Generator(np.random.PCG64(0))
    )


def variant_flags(variant: str) -> tuple[bool, bool]:
    """(use_labels, use_queue) for a training variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return variant != "infonce", variant == "sa_be"


def build_featurizer(cfg: dict) -> TextFeaturizer:
    model = cfg["model"]
    return TextFeaturizer(int(model["text_hash_dim"]), tuple(model["ngram_orders"]))


def build_vocab(cfg: dict) -> LabelVocabulary:
    path = cfg["data"].get("vocab_path")
    return LabelVocabulary.from_file(path) if path else LabelVocabulary.default()


def build_rules(cfg: dict) -> RuleSet:
    path = cfg["data"].get("rules_path")
    return RuleSet.from_file(path) if path else RuleSet.default()


def generator_config(cfg: dict, seed: int | None = None) -> GeneratorConfig:
    data = cfg["data"]
    return GeneratorConfig(
        size=int(data["records"]),
        latent_classes=int(data["latent_classes"]),
        normal_classes=int(data.get("normal_classes", 4)),
        noise_scale=float(data["noise_scale"]),
        image_dim=int(data["image_dim"]),
        seed=int(seed if seed is not None else (data.get("seed") or cfg["experiment"]["seed"])),
        target_mle=data.get("target_mle"),
        mode=data["mode"],
        max_text_len=int(data["max_text_len"]),
    )


def init_state(cfg: dict, vocab: LabelVocabulary | None = None) -> TrainState:
    vocab = vocab or build_vocab(cfg)
    model = cfg["model"]
    seed = int(cfg["experiment"]["seed"])
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
    image = EncoderParams.init(int(cfg["data"]["image_dim"]), int(model["hidden_dim"]),
                               int(model["proj_dim"]), rng)
    text = EncoderParams.init(int(model["text_hash_dim"]), int(model["hidden_dim"]),
                              int(model["proj_dim"]), rng)
    pair = EncoderPair(image, text)
    mom = MomentumPair.init_from(pair, float(cfg["queue"]["momentum"]))
    temp = Temperature.from_tau(float(cfg["loss"]["tau_init"]),
                                float(cfg["loss"]["tau_min"]), float(cfg["loss"]["tau_max"]))
    queue = MemoryQueue(int(cfg["queue"]["capacity"]), int(model["proj_dim"]))
    opt_cfg = cfg["optimizer"]
    opt = MomentOptimizer(OptimizerConfig(
        lr=float(opt_cfg["lr"]), beta1=float(opt_cfg["beta1"]), beta2=float(opt_cfg["beta2"]),
        eps=float(opt_cfg["eps"]), weight_decay=float(opt_cfg["weight_decay"]),
    ))
    state_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 4])))
    return TrainState(cfg, vocab, build_featurizer(cfg), pair, mom, temp, queue, opt,
                      t=0, rng=state_rng)


def _normalize_rows(F: np.ndarray):
    norms = np.linalg.norm(F, axis=1, keepdims=True)
    norms = np.maximum(norms, 1e-12)
    return F / norms, norms


def _unnormalize_grad(d_hat: np.ndarray, hat: np.ndarray, norms: np.ndarray) -> np.ndarray:
    return (d_hat - (d_hat * hat).sum(axis=1, keepdims=True) * hat) / norms


def compute_losses(pair: EncoderPair, temp: Temperature, mom: MomentumPair,
                   queue_snap, batch: Batch, use_labels: bool, use_queue: bool,
                   with_grads: bool = False):
    """Shared loss path; with_grads also returns dL/d(parameter) by name.

    queue_snap is a (U, V, labels) snapshot taken before the batch is pushed.
    """
    tau = temp.tau
    u_raw, tape_u = forward_batch(pair.image, batch.images)
    v_raw, tape_v = forward_batch(pair.text, batch.text_feats)
    u_hat, u_norms = _normalize_rows(u_raw)
    v_hat, v_norms = _normalize_rows(v_raw)
    b = len(batch.labels)

    z = np.clip(u_hat @ v_hat.T, -1.0, 1.0)
    if use_labels:
        s = pairwise_label_similarity(batch.labels, batch.labels)
    else:
        s = np.zeros((b, b))
    bundle = SimilarityBundle.build(z, s, tau)

    d_u_hat = np.zeros_like(u_hat)
    d_v_hat = np.zeros_like(v_hat)
    dtau_total = 0.0

    if with_grads:
        l_i2t, l_t2i, dz, dtau = in_batch_losses_and_grads(bundle, tau)
        d_u_hat += dz @ v_hat
        d_v_hat += dz.T @ u_hat
        dtau_total += dtau
    else:
        l_i2t = wsc_loss(bundle, "i2t")
        l_t2i = wsc_loss(bundle, "t2i")

    l_mom_i2t = 0.0
    l_mom_t2i = 0.0
    occupancy = 0
    if use_queue:
        qu, qv, qlabels = queue_snap
        occupancy = qu.shape[0]
        um_raw, _ = forward_batch(mom.image, batch.images)
        vm_raw, _ = forward_batch(mom.text, batch.text_feats)
        um_hat, _ = _normalize_rows(um_raw)
        vm_hat, _ = _normalize_rows(vm_raw)
        if occupancy > 0:
            if use_labels:
                s_q = pairwise_label_similarity(batch.labels, qlabels)
            else:
                s_q = np.zeros((b, occupancy))
            z_pos_i2t = np.clip((u_hat * vm_hat).sum(axis=1), -1.0, 1.0)
            z_q_i2t = np.clip(u_hat @ qv.T, -1.0, 1.0)
            qb_i2t = QueueSimilarityBundle(z_pos_i2t, z_q_i2t, s_q)
            z_pos_t2i = np.clip((v_hat * um_hat).sum(axis=1), -1.0, 1.0)
            z_q_t2i = np.clip(v_hat @ qu.T, -1.0, 1.0)
            qb_t2i = QueueSimilarityBundle(z_pos_t2i, z_q_t2i, s_q)
            if with_grads:
                l_mom_i2t, dz_pos, dz_q, dtau_q = momentum_wsc_grads(qb_i2t, tau)
                d_u_hat += dz_pos[:, None] * vm_hat + dz_q @ qv
                dtau_total += dtau_q
                l_mom_t2i, dz_pos, dz_q, dtau_q = momentum_wsc_grads(qb_t2i, tau)
                d_v_hat += dz_pos[:, None] * um_hat + dz_q @ qu
                dtau_total += dtau_q
            else:
                l_mom_i2t = momentum_wsc_loss(qb_i2t, tau)
                l_mom_t2i = momentum_wsc_loss(qb_t2i, tau)
        aux_push = (um_hat, vm_hat)
    else:
        aux_push = None

    parts = {
        "loss_i2t": l_i2t,
        "loss_t2i": l_t2i,
        "loss_mom_i2t": l_mom_i2t,
        "loss_mom_t2i": l_mom_t2i,
        "loss_total": total_loss(l_i2t, l_t2i, l_mom_i2t, l_mom_t2i),
        "queue_occupancy": occupancy,
        "tau": tau,
    }
    aux = {"push_features": aux_push, "bundle": bundle}
    if not with_grads:
        return parts, None, aux

    d_u = _unnormalize_grad(d_u_hat, u_hat, u_norms)
    d_v = _unnormalize_grad(d_v_hat, v_hat, v_norms)
    g_image = backward_batch(pair.image, tape_u, d_u)
    g_text = backward_batch(pair.text, tape_v, d_v)
    grads = {f"image.{n}": a for n, a in g_image.named()}
    grads.update({f"text.{n}": a for n, a in g_text.named()})
    grads["temperature"] = np.array([dtau_total * temp.dtau_dparam()])
    return parts, grads, aux


def _empty_snapshot(proj_dim: int):
    return (np.zeros((0, proj_dim)), np.zeros((0, proj_dim)), ())


def train_step(state: TrainState, batch: Batch) -> tuple[TrainState, StepMetrics]:
    """One optimization step; mutates and returns the state."""
    use_labels, use_queue = variant_flags(state.config["loss"]["variant"])
    snap = state.queue.snapshot() if use_queue else _empty_snapshot(state.pair.image.proj_dim)
    warmup = use_queue and snap[0].shape[0] == 0

    parts, grads, aux = compute_losses(
        state.pair, state.temp, state.mom, snap, batch, use_labels, use_queue, with_grads=True
    )
    if not np.isfinite(parts["loss_total"]):
        bundle = aux["bundle"]
        raise RuntimeError(
            "non-finite loss at step "
            f"{state.t}: parts={parts}, z range [{bundle.z.min():.4f}, {bundle.z.max():.4f}], "
            f"s range [{bundle.s.min():.4f}, {bundle.s.max():.4f}], tau={parts['tau']:.6f}"
        )

    temp_arr = np.array([state.temp.log_inv_tau])
    updates = []
    for name, param in state.pair.named():
        updates.append((name, param, grads[name], param.ndim == 2))
    updates.append(("temperature", temp_arr, grads["temperature"], False))
    grad_norm = float(np.sqrt(sum(float((g**2).sum()) for g in grads.values())))
    if not np.isfinite(grad_norm):
        raise RuntimeError(f"non-finite gradient at step {state.t}")
    state.opt.apply(updates)
    state.temp.log_inv_tau = float(temp_arr[0])

    if use_queue:
        state.mom = momentum_update(state.pair, state.mom)
        um_hat, vm_hat = aux["push_features"]
        state.queue.push_batch(list(um_hat), list(vm_hat), batch.labels)

    state.t += 1
    metrics = StepMetrics(
        step=state.t,
        loss_i2t=parts["loss_i2t"],
        loss_t2i=parts["loss_t2i"],
        loss_mom_i2t=parts["loss_mom_i2t"],
        loss_mom_t2i=parts["loss_mom_t2i"],
        loss_total=parts["loss_total"],
        tau=parts["tau"],
        queue_occupancy=state.queue.occupancy if use_queue else 0,
        grad_norm=grad_norm,
        queue_warmup=warmup,
    )
    return state, metrics


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    per_param: dict

    def passed(self, threshold: float = 1e-6) -> bool:
        return self.max_rel_error <= threshold


def grad_check(state: TrainState, batch: Batch, epsilon: float = 1e-5) -> GradCheckReport:
    """Central finite differences of the full objective against analytic gradients.

    Relative error uses a 1e-4 denominator floor so near-zero entries are judged
    against the finite-difference noise floor instead of dividing by zero.
    """
    use_labels, use_queue = variant_flags(state.config["loss"]["variant"])
    snap = state.queue.snapshot() if use_queue else _empty_snapshot(state.pair.image.proj_dim)
    _, grads, _ = compute_losses(
        state.pair, state.temp, state.mom, snap, batch, use_labels, use_queue, with_grads=True
    )

    def loss_at(pair: EncoderPair, temp: Temperature) -> float:
        parts, _, _ = compute_losses(pair, temp, state.mom, snap, batch,
                                     use_labels, use_queue, with_grads=False)
        return parts["loss_total"]

    def rel(a: float, f: float) -> float:
        return abs(a - f) / max(abs(a), abs(f), 1e-4)

    per_param = {}
    work = state.pair.copy()
    arrays = dict(work.named())
    for name, arr in arrays.items():
        worst = 0.0
        flat = arr.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + epsilon
            up = loss_at(work, state.temp)
            flat[i] = keep - epsilon
            down = loss_at(work, state.temp)
            flat[i] = keep
            fd = (up - down) / (2.0 * epsilon)
            worst = max(worst, rel(float(grads[name].reshape(-1)[i]), fd))
        per_param[name] = worst

    t_up = Temperature(state.temp.log_inv_tau + epsilon, state.temp.tau_min, state.temp.tau_max)
    t_down = Temperature(state.temp.log_inv_tau - epsilon, state.temp.tau_min, state.temp.tau_max)
    fd_t = (loss_at(work, t_up) - loss_at(work, t_down)) / (2.0 * epsilon)
    per_param["temperature"] = rel(float(grads["temperature"][0]), fd_t)

    worst_param = max(per_param, key=per_param.get)
    return GradCheckReport(per_param[worst_param], worst_param, per_param)


def save_checkpoint(state: TrainState, path) -> None:
    """Versioned container with every tensor, counters, queue, and RNG state."""
    arrays = {
        "format_version": np.array(CHECKPOINT_FORMAT_VERSION),
        "config_json": np.array(json.dumps(state.config, sort_keys=True)),
        "t": np.array(state.t),
        "log_inv_tau": np.array([state.temp.log_inv_tau]),
        "mom_m": np.array(state.mom.m),
        "mom_t": np.array(state.mom.t),
        "opt_step_count": np.array(state.opt.step_count),
        "rng_state_json": np.array(json.dumps(state.rng.bit_generator.state)),
    }
    for name, arr in state.pair.named():
        arrays[f"pair.{name}"] = arr
    for tower, params in (("image", state.mom.image), ("text", state.mom.text)):
        for name, arr in params.named():
            arrays[f"mom.{tower}.{name}"] = arr
    for name, arr in state.opt.state_arrays().items():
        arrays[f"opt.{name}"] = arr
    qu, qv, qlabels = state.queue.snapshot()
    arrays["queue.u"] = qu
    arrays["queue.v"] = qv
    arrays["queue.labels"] = (
        np.stack([y.bits for y in qlabels]).astype(np.uint8)
        if qlabels else np.zeros((0, state.vocab.c_total), dtype=np.uint8)
    )
    np.savez(path, **arrays)


def load_checkpoint(path, vocab: LabelVocabulary | None = None) -> TrainState:
    with np.load(path, allow_pickle=False) as payload:
        version = int(payload["format_version"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        cfg = json.loads(str(payload["config_json"]))
        state = init_state(cfg, vocab)
        state.t = int(payload["t"])
        state.temp.log_inv_tau = float(payload["log_inv_tau"][0])
        for name, arr in state.pair.named():
            arr[...] = payload[f"pair.{name}"]
        for tower, params in (("image", state.mom.image), ("text", state.mom.text)):
            for name, arr in params.named():
                arr[...] = payload[f"mom.{tower}.{name}"]
        state.mom.m = float(payload["mom_m"])
        state.mom.t = int(payload["mom_t"])
        opt_arrays = {
            key[len("opt."):]: payload[key]
            for key in payload.files
            if key.startswith("opt.") and key != "opt_step_count"
        }
        state.opt.load_state_arrays(opt_arrays, int(payload["opt_step_count"]))
        labels = [MultiHotLabel(state.vocab, bits) for bits in payload["queue.labels"]]
        if labels:
            state.queue.push_batch(list(payload["queue.u"]), list(payload["queue.v"]), labels)
        state.rng.bit_generator.state = json.loads(str(payload["rng_state_json"]))
    return state


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 2, epoch])))
    return rng.permutation(n)


def batch_noise(seed: int, epoch: int, step: int, shape) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 3, epoch, step])))
    return rng.standard_normal(shape)


def evaluate_state(state: TrainState, images: np.ndarray, text_feats: np.ndarray,
                   labels: list, eval_batch_size: int, eval_rounds: int = 4,
                   eval_seed: int = 0) -> dict:
    """Held-out retrieval averaged over several mini-batch shufflings, plus
    zero-shot prompt matching. More rounds mean more batch compositions and a
    tighter recall estimate for the same final model."""
    u_raw, _ = forward_batch(state.pair.image, images)
    v_raw, _ = forward_batch(state.pair.text, text_feats)
    u_hat, _ = _normalize_rows(u_raw)
    v_hat, _ = _normalize_rows(v_raw)

    n = len(labels)
    recall1, recall5, mean_rank = [], [], []
    for round_idx in range(max(int(eval_rounds), 1)):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([eval_seed, 5, round_idx])))
        order = rng.permutation(n) if round_idx else np.arange(n)
        for i in range(n // eval_batch_size):
            idx = order[i * eval_batch_size : (i + 1) * eval_batch_size]
            if idx.size < 2:
                continue
            z = u_hat[idx] @ v_hat[idx].T
            stats = retrieval_metrics(z)
            for d in ("i2t", "t2i"):
                recall1.append(stats[d]["recall1"])
                recall5.append(stats[d]["recall5"])
                mean_rank.append(stats[d]["mean_rank"])

    prompts = [prompt_for_category(c) for c in state.vocab.categories]
    prompt_feats = state.featurizer.featurize_batch(prompts)
    p_raw, _ = forward_batch(state.pair.text, prompt_feats)
    p_hat, _ = _normalize_rows(p_raw)
    table = ScoreTable(u_hat @ p_hat.T, labels_to_matrix(labels))
    auc_res = auc(table)
    map_res = map_score(table)

    return {
        "retrieval_recall1": float(np.mean(recall1)) if recall1 else float("nan"),
        "retrieval_recall5": float(np.mean(recall5)) if recall5 else float("nan"),
        "retrieval_mean_rank": float(np.mean(mean_rank)) if mean_rank else float("nan"),
        "zs_auc": auc_res["macro"],
        "zs_map": map_res["mAP"],
        "zs_skipped_classes": len(auc_res["skipped"]),
    }


@dataclass
class RunResult:
    history: list
    final_eval: dict
    state: TrainState


def run_training(cfg: dict, dataset: Dataset | None = None,
                 state: TrainState | None = None,
                 step_callback=None) -> RunResult:
    """Train per config on a (possibly shared) dataset; returns history and state.

    history holds one dict per step plus one per epoch; determinism follows
    from the seed-indexed epoch orders and noise draws.
    """
    exp = cfg["experiment"]
    seed = int(exp["seed"])
    if dataset is None:
        dataset = generate_dataset(generator_config(cfg), build_vocab(cfg),
                                   rules=build_rules(cfg) if cfg["data"]["mode"] == "consistency" else None)
    if state is None:
        state = init_state(cfg, dataset.vocab)

    train_ds, eval_ds = dataset.split(float(cfg["data"]["eval_fraction"]))
    train_images = train_ds.image_matrix()
    train_texts = state.featurizer.featurize_batch(train_ds.texts())
    train_labels = train_ds.labels()
    eval_images = eval_ds.image_matrix()
    eval_texts = state.featurizer.featurize_batch(eval_ds.texts())
    eval_labels = eval_ds.labels()

    batch_size = int(exp["batch_size"])
    epochs = int(exp["epochs"])
    steps_per_epoch = len(train_labels) // batch_size
    if steps_per_epoch < 1:
        raise ValueError("training split smaller than one batch")
    augment = float(cfg["data"]["augment_noise"])

    history = []
    start_epoch = state.t // steps_per_epoch
    start_step = state.t % steps_per_epoch
    final_eval = {}
    for epoch in range(start_epoch, epochs):
        order = epoch_order(seed, epoch, len(train_labels))
        first = start_step if epoch == start_epoch else 0
        for b in range(first, steps_per_epoch):
            idx = order[b * batch_size : (b + 1) * batch_size]
            images = train_images[idx]
            if augment > 0.0:
                images = images + augment * batch_noise(seed, epoch, b, images.shape)
            batch = Batch(images, train_texts[idx], [train_labels[i] for i in idx])
            state, metrics = train_step(state, batch)
            history.append(metrics.to_dict())
            if step_callback is not None:
                step_callback(state, metrics)
        # extra shuffling rounds only where the number is load-bearing
        rounds = int(exp.get("eval_rounds", 4)) if epoch == epochs - 1 else 1
        final_eval = evaluate_state(state, eval_images, eval_texts, eval_labels,
                                    int(exp["eval_batch_size"]),
                                    eval_rounds=rounds, eval_seed=seed)
        epoch_row = {"kind": "epoch", "epoch": epoch, "step": state.t, **final_eval}
        history.append(epoch_row)
        logger.info("epoch %d: %s", epoch, {k: round(v, 4) for k, v in final_eval.items()
                                            if isinstance(v, float)})
    return RunResult(history, final_eval, state)


def write_run_outputs(out_dir, cfg: dict, result: RunResult, render_figures: bool = True) -> None:
    """Run directory contract: config echo, manifest, metrics, summary, checkpoint."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "effective_config.json"), "w", encoding="utf-8") as fh:
        fh.write(config_json(cfg) + "\n")
    digest = hashlib.sha256(config_json(cfg).encode("utf-8")).hexdigest()
    manifest = {
        "package_version": __version__,
        "seed": cfg["experiment"]["seed"],
        "variant": cfg["loss"]["variant"],
        "config_sha256": digest,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "metrics.jsonl"), "w", encoding="utf-8") as fh:
        for row in result.history:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    epoch_rows = [r for r in result.history if r["kind"] == "epoch"]
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8", newline="") as fh:
        if epoch_rows:
            writer = csv.DictWriter(fh, fieldnames=list(epoch_rows[0].keys()))
            writer.writeheader()
            writer.writerows(epoch_rows)
    save_checkpoint(result.state, os.path.join(out_dir, "checkpoint.npz"))
    if render_figures:
        from . import plots

        plots.render_training_figure(result.history,
                                     os.path.join(out_dir, "figures", "training.png"))
