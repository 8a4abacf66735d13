"""Parameter initialization and the transformer building blocks shared by
the encoder and decoder."""
from __future__ import annotations

import numpy as np

from .numerics import (
    Tensor,
    add,
    dropout,
    layer_norm,
    linear,
    masked_attention,
    relu,
    reshape,
    transpose,
)

Params = dict[str, Tensor]


class Initializer:
    """Seeded uniform(-r, r) weights, zero biases, unit layer-norm gains."""

    def __init__(self, params: Params, rng: np.random.Generator, init_range: float, dtype):
        self.params = params
        self.rng = rng
        self.r = init_range
        self.dtype = dtype

    def weight(self, name: str, *shape: int) -> None:
        data = self.rng.uniform(-self.r, self.r, size=shape).astype(self.dtype)
        self.params[name] = Tensor(data, requires_grad=True)

    def bias(self, name: str, *shape: int) -> None:
        self.params[name] = Tensor(np.zeros(shape, dtype=self.dtype), requires_grad=True)

    def linear(self, prefix: str, n_in: int, n_out: int) -> None:
        self.weight(prefix + ".w", n_in, n_out)
        self.bias(prefix + ".b", n_out)

    def layer_norm(self, prefix: str, d: int) -> None:
        self.params[prefix + ".g"] = Tensor(np.ones(d, dtype=self.dtype), requires_grad=True)
        self.bias(prefix + ".b", d)

    def attention(self, prefix: str, d: int) -> None:
        for p in ("q", "k", "v", "o"):
            self.linear(f"{prefix}.{p}", d, d)

    def ffn(self, prefix: str, d: int, d_ff: int) -> None:
        self.linear(prefix + ".fc1", d, d_ff)
        self.linear(prefix + ".fc2", d_ff, d)


def dense(params: Params, prefix: str, x: Tensor) -> Tensor:
    return linear(x, params[prefix + ".w"], params[prefix + ".b"])


def norm(params: Params, prefix: str, x: Tensor) -> Tensor:
    return layer_norm(x, params[prefix + ".g"], params[prefix + ".b"])


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    b, t, d = x.shape
    return transpose(reshape(x, (b, t, n_heads, d // n_heads)), (0, 2, 1, 3))


def attention(
    params: Params,
    prefix: str,
    x_q: Tensor,
    x_kv: Tensor,
    allowed: np.ndarray,
    n_heads: int,
    record: list | None = None,
) -> Tensor:
    """Multi-head attention; ``allowed`` is (B, Tq, Tk) boolean."""
    q = _split_heads(dense(params, prefix + ".q", x_q), n_heads)
    k = _split_heads(dense(params, prefix + ".k", x_kv), n_heads)
    v = _split_heads(dense(params, prefix + ".v", x_kv), n_heads)
    out, weights = masked_attention(q, k, v, allowed[:, None, :, :])
    if record is not None:
        record.append(weights)
    b, h, t, dh = out.shape
    merged = reshape(transpose(out, (0, 2, 1, 3)), (b, t, h * dh))
    return dense(params, prefix + ".o", merged)


def feed_forward(params: Params, prefix: str, x: Tensor, rate: float, rng, training: bool) -> Tensor:
    h = relu(dense(params, prefix + ".fc1", x))
    h = dropout(h, rate, rng, training)
    return dense(params, prefix + ".fc2", h)


def residual_norm(params: Params, prefix: str, x: Tensor, sub: Tensor, rate: float, rng, training: bool) -> Tensor:
    return norm(params, prefix, add(x, dropout(sub, rate, rng, training)))
