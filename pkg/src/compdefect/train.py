"""Joint training of the classifier and repair decoder."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import TrainConfig
from .labels import DefectLabel
from .metrics import exact_match_accuracy, macro_prf
from .model import CompDefectModel, Example, Forward, build_vocabulary
from .numerics import AdamState, GradCheckReport, NonFiniteValue, Tensor, adam_step, add, backward, cross_entropy, grad_check, mul
from .triples import FunctionTriple


class TrainError(RuntimeError):
    pass


class EmptySplit(TrainError):
    pass


class NonFiniteLoss(TrainError):
    pass


class RatioError(ValueError):
    pass


@dataclass
class DatasetSplit:
    train: list[FunctionTriple]
    validation: list[FunctionTriple]
    test: list[FunctionTriple]


def _split_counts(n: int, ratios: Sequence[float]) -> list[int]:
    quotas = [n * r for r in ratios]
    counts = [math.floor(q + 1e-9) for q in quotas]
    leftover = n - sum(counts)
    # leftover units go to splits with a fractional share, train first
    for i, q in enumerate(quotas):
        if leftover == 0:
            break
        if q - counts[i] > 1e-9:
            counts[i] += 1
            leftover -= 1
    counts[0] += leftover
    return counts


def stratified_split(dataset: Sequence[FunctionTriple], ratios=(0.8, 0.1, 0.1), seed: int = 0) -> DatasetSplit:
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise RatioError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    by_label: dict[DefectLabel, list[FunctionTriple]] = {}
    for t in dataset:
        by_label.setdefault(t.label, []).append(t)
    out: tuple[list, list, list] = ([], [], [])
    for label in sorted(by_label):
        items = by_label[label]
        order = rng.permutation(len(items))
        counts = _split_counts(len(items), ratios)
        start = 0
        for part, c in zip(out, counts):
            part.extend(items[i] for i in order[start : start + c])
            start += c
    return DatasetSplit(*out)


def classification_nll(logits: Tensor, labels) -> Tensor:
    return cross_entropy(logits, np.asarray(labels, dtype=np.int64))


def generation_nll(logits: Tensor, targets, weights) -> Tensor:
    return cross_entropy(logits, targets, weights)


def _examples(batch, model: CompDefectModel) -> list[Example]:
    return [b if isinstance(b, Example) else model.example(b) for b in batch]


def classification_loss(batch, model: CompDefectModel, training=False, rng=None) -> Tensor:
    ex = _examples(batch, model)
    f = model.forward(ex, training, rng, with_decoder=False)
    return classification_nll(f.cls_logits, [x.label for x in ex])


def generation_loss(batch, model: CompDefectModel, training=False, rng=None) -> Tensor:
    f = model.forward(_examples(batch, model), training, rng)
    return generation_nll(f.dec_logits, f.tgt_out, f.tgt_weights)


def combine(l1: Tensor | None, l2: Tensor | None, weights=(1.0, 1.0)) -> Tensor:
    w1, w2 = weights
    if w1 < 0 or w2 < 0 or (w1 == 0 and w2 == 0):
        raise ValueError("loss weights must be >= 0 and not both zero")
    parts = []
    if w1 and l1 is not None:
        parts.append(mul(l1, w1))
    if w2 and l2 is not None:
        parts.append(mul(l2, w2))
    return parts[0] if len(parts) == 1 else add(parts[0], parts[1])


def joint_losses(ex: Sequence[Example], model: CompDefectModel, weights=(1.0, 1.0), training=False, rng=None):
    """(L1, L2, L3); L2 is None when the generation weight is zero."""
    f: Forward = model.forward(ex, training, rng, with_decoder=weights[1] != 0)
    l1 = classification_nll(f.cls_logits, [x.label for x in ex])
    l2 = generation_nll(f.dec_logits, f.tgt_out, f.tgt_weights) if f.dec_logits is not None else None
    return l1, l2, combine(l1, l2, weights)


def joint_loss(batch, model: CompDefectModel, weights=(1.0, 1.0), training=False, rng=None) -> Tensor:
    return joint_losses(_examples(batch, model), model, weights, training, rng)[2]


def joint_grad_check(
    model: CompDefectModel,
    batch,
    weights=(1.0, 1.0),
    tolerance: float = 1e-4,
    max_coords: int | None = 4,
    seed: int = 0,
) -> GradCheckReport:
    """Finite-difference check of the full joint loss; dropout must be off."""
    ex = _examples(batch, model)
    return grad_check(lambda: joint_losses(ex, model, weights)[2], model.params, tolerance, max_coords=max_coords, seed=seed)


@dataclass
class EvalResult:
    label_accuracy: float
    macro_f1: float
    exact_match: float
    predicted_labels: list[int]
    probabilities: np.ndarray
    repairs: list[list[str]]

    @property
    def score(self) -> float:
        return self.macro_f1 + self.exact_match


def evaluate(model: CompDefectModel, examples: Sequence[Example], beam_width: int = 1, batch_size: int = 32) -> EvalResult:
    """Label accuracy, macro-F1 and exact-match repair on labelled examples."""
    probs, repairs = [], []
    for i in range(0, len(examples), batch_size):
        chunk = examples[i : i + batch_size]
        limit = max(len(x.target) for x in chunk) + 8
        if beam_width == 1:
            p, r = model.greedy_batch(chunk, max_len=limit)
            probs.append(p)
            repairs.extend(r)
        else:
            for x in chunk:
                src = x.source
                pred = model.predict(src.clean_src, src.buggy_src, beam_width, always_generate=True, max_len=limit)
                probs.append(pred.probabilities[None])
                repairs.append(pred.patch_tokens or [])
    P = np.concatenate(probs, axis=0)
    pred_labels = [int(i) for i in np.argmax(P, axis=1)]
    gold = [x.label for x in examples]
    refs = [model.vocab.decode(x.target[1:-1], strip_special=False) for x in examples]
    acc = float(np.mean([p == g for p, g in zip(pred_labels, gold)]))
    f1 = macro_prf(pred_labels, gold)[2]
    em = exact_match_accuracy([" ".join(r) for r in repairs], [" ".join(r) for r in refs])
    return EvalResult(acc, f1, em, pred_labels, P, repairs)


@dataclass
class TrainResult:
    model: CompDefectModel
    best_epoch: int
    best_score: float
    history: list[dict] = field(default_factory=list)
    checkpoint: bytes = b""


def lr_at(step: int, total: int, cfg: TrainConfig) -> float:
    warm = max(1, round(cfg.warmup_fraction * total))
    return cfg.learning_rate * min(1.0, step / warm)


def train_model(
    cfg: TrainConfig,
    split: DatasetSplit,
    log_path: str | Path | None = None,
    on_epoch: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Train from scratch; the returned model holds the best validation weights."""
    cfg.validate()
    if not split.train:
        raise EmptySplit("training split is empty")
    if not split.validation:
        raise EmptySplit("validation split is empty")
    vocab = build_vocabulary(split.train, cfg.vocab_min_freq)
    model = CompDefectModel.initialize(cfg.model_config(len(vocab)), vocab, cfg.seed)
    train_ex = [model.example(t) for t in split.train]
    val_ex = [model.example(t) for t in split.validation]

    shuffle_rng = np.random.default_rng(cfg.seed)
    dropout_rng = np.random.default_rng(cfg.seed + 1)
    plist = list(model.params.values())
    state = AdamState()
    steps_per_epoch = math.ceil(len(train_ex) / cfg.batch_size)
    total = max(1, steps_per_epoch * cfg.max_epochs)
    step = 0
    best = (-math.inf, 0, model.to_bytes())
    history = []
    log = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, cfg.max_epochs + 1):
            order = shuffle_rng.permutation(len(train_ex))
            sums = np.zeros(3)
            for s in range(steps_per_epoch):
                batch = [train_ex[i] for i in order[s * cfg.batch_size : (s + 1) * cfg.batch_size]]
                step += 1
                for p in plist:
                    p.zero_grad()
                try:
                    l1, l2, l3 = joint_losses(batch, model, cfg.loss_weights, True, dropout_rng)
                except NonFiniteValue as exc:
                    raise NonFiniteLoss(f"epoch {epoch} step {step}: {exc}") from exc
                vals = (float(l1.data), float(l2.data) if l2 is not None else 0.0, float(l3.data))
                if not all(math.isfinite(v) for v in vals):
                    raise NonFiniteLoss(f"epoch {epoch} step {step}: L1={vals[0]} L2={vals[1]}")
                backward(l3)
                adam_step(model.params, {k: p.grad for k, p in model.params.items() if p.grad is not None}, state, lr_at(step, total, cfg), cfg.beta1, cfg.beta2, cfg.adam_eps)
                sums += np.array(vals) * len(batch)
            rec = {"epoch": epoch, "L1": sums[0] / len(train_ex), "L2": sums[1] / len(train_ex), "L3": sums[2] / len(train_ex)}
            if epoch % cfg.eval_every == 0 or epoch == cfg.max_epochs:
                ev = evaluate(model, val_ex, cfg.val_beam_width, cfg.batch_size)
                rec.update(val_macro_f1=ev.macro_f1, val_exact_match=ev.exact_match, val_score=ev.score)
                if ev.score > best[0]:
                    best = (ev.score, epoch, model.to_bytes())
            history.append(rec)
            if log:
                log.write(json.dumps(rec, sort_keys=True) + "\n")
                log.flush()
            if on_epoch:
                on_epoch(rec)
    finally:
        if log:
            log.close()
    score, epoch, _ = best
    extra = {"best_epoch": epoch, "val_score": score if math.isfinite(score) else None, "train_config": cfg.to_dict()}
    final, _ = CompDefectModel.from_bytes(best[2])
    blob = final.to_bytes(extra)
    return TrainResult(final, epoch, score, history, blob)
