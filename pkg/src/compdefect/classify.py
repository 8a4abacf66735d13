"""Relation head (neural tensor network) and the 17-way change classifier."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .labels import DefectLabel
from .layers import Initializer, Params, dense
from .numerics import ShapeMismatch, Tensor, add, concat, dropout, matmul, mul, no_grad, relu, reshape, softmax, tanh, tsum


@dataclass
class ClassifierOutput:
    probabilities: np.ndarray
    fused: np.ndarray
    logits: np.ndarray


def init_classifier(init: Initializer, cfg: ModelConfig) -> None:
    d, n = cfg.d_model, cfg.n_slices
    init.weight("cls.ntn.gamma", d, n, d)
    init.bias("cls.ntn.b", n)
    init.linear("cls.fuse", n + 2 * d, cfg.fused_width)
    init.linear("cls.out", cfg.fused_width, cfg.num_labels)


def _as_batch(x: Tensor) -> Tensor:
    return reshape(x, (1, x.shape[0])) if len(x.shape) == 1 else x


def ntn_preactivation(h_clean: Tensor, h_buggy: Tensor, gamma: Tensor, b: Tensor) -> Tensor:
    """``h_buggy^T Gamma_k h_clean + b[k]`` for every slice, batched over rows."""
    hc, hb = _as_batch(h_clean), _as_batch(h_buggy)
    d, n, d2 = gamma.shape
    if hc.shape[-1] != d2 or hb.shape[-1] != d or hc.shape[0] != hb.shape[0]:
        raise ShapeMismatch(f"ntn widths clean {hc.shape}, buggy {hb.shape}, gamma {gamma.shape}")
    left = reshape(matmul(hb, reshape(gamma, (d, n * d2))), (hb.shape[0], n, d2))
    scores = tsum(mul(left, reshape(hc, (hc.shape[0], 1, d2))), axis=-1)
    out = add(scores, b)
    return out if len(h_clean.shape) > 1 else reshape(out, (n,))


def ntn_relate(h_clean, h_buggy, gamma, b) -> Tensor:
    """Slice k is ReLU(h_buggy^T Gamma_k h_clean + b[k])."""
    h_clean, h_buggy = _t(h_clean), _t(h_buggy)
    return relu(ntn_preactivation(h_clean, h_buggy, _t(gamma), _t(b)))


def _t(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def classifier_forward(
    params: Params,
    h_clean: Tensor,
    h_buggy: Tensor,
    rate: float = 0.0,
    rng: np.random.Generator | None = None,
    training: bool = False,
) -> tuple[Tensor, Tensor]:
    """Return (logits p, fused e) for batched [CLS] states."""
    h_nt = ntn_relate(h_clean, h_buggy, params["cls.ntn.gamma"], params["cls.ntn.b"])
    h_change = concat([h_nt, h_buggy, h_clean], axis=-1)
    expected = params["cls.fuse.w"].shape[0]
    if h_change.shape[-1] != expected:
        raise ShapeMismatch(f"h_change width {h_change.shape[-1]} != {expected}")
    e = tanh(dense(params, "cls.fuse", h_change))
    logits = dense(params, "cls.out", dropout(e, rate, rng, training))
    return logits, e


def classify_change(h_clean, h_buggy, params: Params) -> ClassifierOutput:
    with no_grad():
        logits, e = classifier_forward(params, _t(h_clean), _t(h_buggy))
        probs = softmax(logits)
    return ClassifierOutput(probs.data, e.data, logits.data)


def predict_label(output: ClassifierOutput | np.ndarray) -> DefectLabel:
    probs = output.probabilities if isinstance(output, ClassifierOutput) else np.asarray(output)
    # np.argmax returns the first maximum, i.e. the lowest id on ties
    return DefectLabel(int(np.argmax(probs)))
