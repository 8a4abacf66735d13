"""Transformer decoder with cross-attention over the fused classification
vector and the buggy version's encoder states, plus beam search."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import ModelConfig
from .encoder import EncoderOutput
from .layers import Initializer, Params, attention, dense, feed_forward, norm, residual_norm
from .numerics import NumericsError, ShapeMismatch, Tensor, add, dropout, embedding, log_softmax, no_grad, tanh


class PrefixTooLong(NumericsError):
    pass


@dataclass
class CrossContext:
    memory: np.ndarray  # (1 + L_code + 1 + L_vars, d)

    def __len__(self) -> int:
        return int(self.memory.shape[0])


@dataclass(frozen=True)
class BeamHypothesis:
    ids: tuple[int, ...]
    logprob: float
    finished: bool


def init_decoder(init: Initializer, cfg: ModelConfig) -> None:
    d = cfg.d_model
    if cfg.fused_width != d:
        init.linear("dec.proj_e", cfg.fused_width, d)
    init.weight("dec.tok_emb", cfg.vocab_size, d)
    init.weight("dec.pos_emb", cfg.max_decode_len, d)
    init.layer_norm("dec.emb_ln", d)
    for i in range(cfg.dec_layers):
        p = f"dec.layers.{i}"
        init.attention(p + ".self", d)
        init.layer_norm(p + ".ln1", d)
        init.attention(p + ".cross", d)
        init.layer_norm(p + ".ln2", d)
        init.ffn(p + ".ffn", d, cfg.d_ff)
        init.layer_norm(p + ".ln3", d)
    init.linear("dec.head", d, d)
    init.linear("dec.out", d, cfg.vocab_size)


def project_e(params: Params, e: Tensor) -> Tensor:
    return dense(params, "dec.proj_e", e) if "dec.proj_e.w" in params else e


def build_cross_context(e, enc_buggy: EncoderOutput, params: Params | None = None) -> CrossContext:
    """Memory rows ``[e; code states; sep state; var states]``."""
    e = np.asarray(e.data if isinstance(e, Tensor) else e)
    d = enc_buggy.hidden.shape[1]
    if params is not None and "dec.proj_e.w" in params:
        with no_grad():
            e = project_e(params, Tensor(e)).data
    if e.shape != (d,):
        raise ShapeMismatch(f"fused vector width {e.shape} does not match model width {d}")
    return CrossContext(np.concatenate([e[None, :], enc_buggy.hidden[1:]], axis=0))


def causal_mask(B: int, T: int) -> np.ndarray:
    return np.broadcast_to(np.tril(np.ones((T, T), dtype=bool)), (B, T, T))


def decoder_forward(
    params: Params,
    cfg: ModelConfig,
    prefix_ids: np.ndarray,
    memory: Tensor,
    memory_allowed: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
    record: list | None = None,
    embedded: Tensor | None = None,
) -> Tensor:
    """Next-token logits ``(B, T, V)`` for every prefix position.

    ``memory_allowed`` is (B, M): which memory rows are real, not padding.
    """
    prefix_ids = np.asarray(prefix_ids, dtype=np.int64)
    B, T = prefix_ids.shape
    if T > cfg.max_decode_len:
        raise PrefixTooLong(f"prefix length {T} exceeds max_decode_len={cfg.max_decode_len}")
    if memory.shape[-1] != cfg.d_model:
        raise ShapeMismatch(f"memory width {memory.shape[-1]} != d_model {cfg.d_model}")
    if embedded is None:
        x = add(embedding(params["dec.tok_emb"], prefix_ids), embedding(params["dec.pos_emb"], np.arange(T)))
    else:
        x = embedded
    x = dropout(norm(params, "dec.emb_ln", x), cfg.dropout, rng, training)
    self_allowed = causal_mask(B, T)
    cross_allowed = np.broadcast_to(np.asarray(memory_allowed, dtype=bool)[:, None, :], (B, T, memory.shape[1]))
    for i in range(cfg.dec_layers):
        p = f"dec.layers.{i}"
        a = attention(params, p + ".self", x, x, self_allowed, cfg.n_heads, record)
        x = residual_norm(params, p + ".ln1", x, a, cfg.dropout, rng, training)
        c = attention(params, p + ".cross", x, memory, cross_allowed, cfg.n_heads)
        x = residual_norm(params, p + ".ln2", x, c, cfg.dropout, rng, training)
        f = feed_forward(params, p + ".ffn", x, cfg.dropout, rng, training)
        x = residual_norm(params, p + ".ln3", x, f, cfg.dropout, rng, training)
    h = dropout(tanh(dense(params, "dec.head", x)), cfg.dropout, rng, training)
    return dense(params, "dec.out", h)


def decode_log_probs(prefixes: Sequence[Sequence[int]], ctx: CrossContext, params: Params, cfg: ModelConfig) -> np.ndarray:
    """Log-distribution of the next token after each equal-length prefix."""
    ids = np.asarray(prefixes, dtype=np.int64)
    if ids.ndim != 2 or ids.shape[1] == 0:
        raise ShapeMismatch("prefixes must be a non-empty rectangular batch")
    B = ids.shape[0]
    mem = np.broadcast_to(ctx.memory, (B,) + ctx.memory.shape)
    with no_grad():
        logits = decoder_forward(params, cfg, ids, Tensor(np.ascontiguousarray(mem)), np.ones((B, len(ctx)), dtype=bool))
        return log_softmax(logits).data[:, -1, :]


def decode_step(prefix: BeamHypothesis | Sequence[int], ctx: CrossContext, params: Params, cfg: ModelConfig, sos_id: int | None = None) -> np.ndarray:
    """Probability vector over the vocabulary for the token after ``prefix``."""
    ids = prefix.ids if isinstance(prefix, BeamHypothesis) else tuple(prefix)
    if not ids:
        raise ShapeMismatch("prefix must start with [SOS]")
    if sos_id is not None and ids[0] != sos_id:
        raise ShapeMismatch("prefix must start with [SOS]")
    return np.exp(decode_log_probs([ids], ctx, params, cfg)[0])


StepFn = Callable[[list[tuple[int, ...]]], np.ndarray]


def beam_search(step_fn: StepFn, sos: int, eos: int, width: int, max_len: int) -> list[BeamHypothesis]:
    """Keep the ``width`` best hypotheses by cumulative log-probability.

    ``step_fn`` maps a list of prefixes to an (n, V) array of next-token
    log-probabilities.  Finished hypotheses stay in the pool unexpanded and
    compete with the expansions.  ``max_len`` bounds the generated tokens.
    Ties are broken by token sequence, lowest first.
    """
    if width < 1 or max_len < 1:
        raise ValueError("width and max_len must be >= 1")
    beam = [BeamHypothesis((sos,), 0.0, False)]
    for _ in range(max_len):
        live = [h for h in beam if not h.finished]
        if not live:
            break
        logp = np.asarray(step_fn([h.ids for h in live]))
        pool = [h for h in beam if h.finished]
        for h, row in zip(live, logp):
            for tok, lp in enumerate(row):
                pool.append(BeamHypothesis(h.ids + (tok,), h.logprob + float(lp), tok == eos))
        pool.sort(key=lambda h: (-h.logprob, h.ids))
        beam = pool[:width]
    return sorted(beam, key=lambda h: (-h.logprob, h.ids))


def greedy_search(step_fn: StepFn, sos: int, eos: int, max_len: int) -> BeamHypothesis:
    ids, total = (sos,), 0.0
    for _ in range(max_len):
        row = np.asarray(step_fn([ids]))[0]
        tok = int(np.argmax(row))
        ids, total = ids + (tok,), total + float(row[tok])
        if tok == eos:
            return BeamHypothesis(ids, total, True)
    return BeamHypothesis(ids, total, False)


def model_step_fn(ctx: CrossContext, params: Params, cfg: ModelConfig) -> StepFn:
    def step(prefixes):
        # beams of equal length share one forward pass
        return decode_log_probs(prefixes, ctx, params, cfg)

    return step


def generate(ctx: CrossContext, params: Params, cfg: ModelConfig, sos: int, eos: int, width: int, max_len: int | None = None) -> list[BeamHypothesis]:
    limit = min(max_len or cfg.max_decode_len, cfg.max_decode_len)
    step = model_step_fn(ctx, params, cfg)
    if width == 1:
        return [greedy_search(step, sos, eos, limit)]
    return beam_search(step, sos, eos, width, limit)

