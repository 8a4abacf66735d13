"""Graph-guided transformer encoder over ``[CLS] code [SEP] dfg-nodes``."""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import ModelConfig
from .dfg import DataFlowGraph, build_dfg
from .jparse import FunctionDecl, parse_function
from .layers import Initializer, Params, attention, feed_forward, norm, residual_norm
from .numerics import Tensor, add, dropout, embedding, no_grad

CLS, SEP, PAD, UNK, SOS, EOS = "[CLS]", "[SEP]", "[PAD]", "[UNK]", "[SOS]", "[EOS]"
SPECIALS = (CLS, SEP, PAD, UNK, SOS, EOS)
CLS_ID, SEP_ID, PAD_ID, UNK_ID, SOS_ID, EOS_ID = range(6)

# Position ids: 0 padding, 1 shared by every DFG node, 2.. for the
# [CLS] code [SEP] block.
PAD_POSITION = 0
NODE_POSITION = 1
FIRST_POSITION = 2


class Vocabulary:
    def __init__(self, tokens: Sequence[str] = ()):
        self.id_to_token: list[str] = list(SPECIALS)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(SPECIALS)}
        for t in tokens:
            if t not in self.token_to_id:
                self.token_to_id[t] = len(self.id_to_token)
                self.id_to_token.append(t)

    @classmethod
    def build(cls, streams: Iterable[Sequence[str]], min_freq: int = 2) -> "Vocabulary":
        counts: Counter[str] = Counter()
        for s in streams:
            counts.update(s)
        kept = sorted((t for t, c in counts.items() if c >= min_freq and t not in SPECIALS), key=lambda t: (-counts[t], t))
        return cls(kept)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: Sequence[int], strip_special: bool = True) -> list[str]:
        out = []
        for i in ids:
            i = int(i)
            if strip_special and i < len(SPECIALS):
                continue
            out.append(self.id_to_token[i])
        return out

    def to_list(self) -> list[str]:
        return list(self.id_to_token)

    @classmethod
    def from_list(cls, tokens: Sequence[str]) -> "Vocabulary":
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("vocabulary does not start with the special tokens")
        return cls(tokens[len(SPECIALS) :])


class Segment(enum.IntEnum):
    SPECIAL = 0
    CODE_TOKEN = 1
    DFG_NODE = 2


@dataclass
class EncoderInput:
    ids: np.ndarray
    positions: np.ndarray
    segment: np.ndarray
    mask: np.ndarray  # allowed[i][j]
    n_code: int
    n_vars: int
    node_tokens: tuple[int, ...] = ()
    node_names: tuple[str, ...] = ()

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def sep_index(self) -> int:
        return 1 + self.n_code


@dataclass
class EncoderOutput:
    hidden: np.ndarray
    n_code: int
    n_vars: int

    @property
    def h_cls(self) -> np.ndarray:
        return self.hidden[0]

    @property
    def h_code(self) -> np.ndarray:
        return self.hidden[1 : 1 + self.n_code]

    @property
    def h_sep(self) -> np.ndarray:
        return self.hidden[1 + self.n_code]

    @property
    def h_vars(self) -> np.ndarray:
        return self.hidden[2 + self.n_code : 2 + self.n_code + self.n_vars]


def build_input(code_tokens: Sequence[str], dfg: DataFlowGraph, vocab: Vocabulary, max_len: int) -> EncoderInput:
    """Lay out ``[CLS] code [SEP] nodes`` with the graph-guided attention mask."""
    if max_len < 3:
        raise ValueError("max_len must be >= 3")
    n_code = len(code_tokens)
    nodes = list(dfg.vars)

    def kept_nodes(k: int):
        return [v for v in nodes if v.token_index < k]

    keep_code = n_code
    while 2 + keep_code + len(kept_nodes(keep_code)) > max_len:
        keep_code -= 1
    kept = kept_nodes(keep_code)
    remap = {v.index: i for i, v in enumerate(kept)}
    edges = [(remap[a], remap[b]) for a, b in sorted(dfg.edges) if a in remap and b in remap]

    n_vars = len(kept)
    L = 2 + keep_code + n_vars
    ids = np.empty(L, dtype=np.int64)
    ids[0] = CLS_ID
    ids[1 : 1 + keep_code] = vocab.encode(code_tokens[:keep_code])
    ids[1 + keep_code] = SEP_ID
    ids[2 + keep_code :] = [vocab.id(v.name) for v in kept]

    positions = np.full(L, NODE_POSITION, dtype=np.int64)
    positions[: 2 + keep_code] = np.arange(FIRST_POSITION, FIRST_POSITION + 2 + keep_code)
    segment = np.full(L, Segment.DFG_NODE, dtype=np.int64)
    segment[1 : 1 + keep_code] = Segment.CODE_TOKEN
    segment[0] = segment[1 + keep_code] = Segment.SPECIAL

    mask = np.zeros((L, L), dtype=bool)
    block = 2 + keep_code
    mask[:block, :block] = True
    for i, v in enumerate(kept):
        node = block + i
        code_pos = 1 + v.token_index
        mask[node, code_pos] = mask[code_pos, node] = True
    for a, b in edges:
        mask[block + a, block + b] = mask[block + b, block + a] = True
    np.fill_diagonal(mask, True)
    return EncoderInput(
        ids,
        positions,
        segment,
        mask,
        keep_code,
        n_vars,
        tuple(v.token_index for v in kept),
        tuple(v.name for v in kept),
    )


def function_input(fn: FunctionDecl | str, vocab: Vocabulary, max_len: int) -> EncoderInput:
    if isinstance(fn, str):
        fn = parse_function(fn)
    return build_input([t.text for t in fn.tokens], build_dfg(fn), vocab, max_len)


def init_encoder(init: Initializer, cfg: ModelConfig) -> None:
    d = cfg.d_model
    init.weight("enc.tok_emb", cfg.vocab_size, d)
    init.weight("enc.pos_emb", cfg.max_len + FIRST_POSITION, d)
    init.weight("enc.seg_emb", len(Segment), d)
    init.layer_norm("enc.emb_ln", d)
    for i in range(cfg.n_layers):
        p = f"enc.layers.{i}"
        init.attention(p + ".attn", d)
        init.layer_norm(p + ".ln1", d)
        init.ffn(p + ".ffn", d, cfg.d_ff)
        init.layer_norm(p + ".ln2", d)


@dataclass
class EncoderBatch:
    ids: np.ndarray
    positions: np.ndarray
    segment: np.ndarray
    allowed: np.ndarray
    lengths: np.ndarray
    n_code: np.ndarray
    n_vars: np.ndarray
    attention_weights: list = field(default_factory=list)


def collate(inputs: Sequence[EncoderInput]) -> EncoderBatch:
    B = len(inputs)
    L = max(len(x) for x in inputs)
    ids = np.full((B, L), PAD_ID, dtype=np.int64)
    pos = np.full((B, L), PAD_POSITION, dtype=np.int64)
    seg = np.zeros((B, L), dtype=np.int64)
    allowed = np.zeros((B, L, L), dtype=bool)
    for b, x in enumerate(inputs):
        n = len(x)
        ids[b, :n] = x.ids
        pos[b, :n] = x.positions
        seg[b, :n] = x.segment
        allowed[b, :n, :n] = x.mask
        idx = np.arange(n, L)
        allowed[b, idx, idx] = True
    return EncoderBatch(
        ids,
        pos,
        seg,
        allowed,
        np.array([len(x) for x in inputs]),
        np.array([x.n_code for x in inputs]),
        np.array([x.n_vars for x in inputs]),
    )


def encoder_forward(
    params: Params,
    cfg: ModelConfig,
    batch: EncoderBatch,
    training: bool = False,
    rng: np.random.Generator | None = None,
    record: list | None = None,
    embedded: Tensor | None = None,
) -> Tensor:
    """Hidden states ``(B, L, d)`` after ``cfg.n_layers`` post-norm layers.

    ``embedded`` replaces the summed input embeddings (before the embedding
    layer norm); used to probe mask leakage.
    """
    if batch.ids.max(initial=0) >= cfg.vocab_size:
        from .numerics import ShapeMismatch

        raise ShapeMismatch("token id outside the vocabulary")
    if embedded is None:
        x = add(
            add(embedding(params["enc.tok_emb"], batch.ids), embedding(params["enc.pos_emb"], batch.positions)),
            embedding(params["enc.seg_emb"], batch.segment),
        )
    else:
        x = embedded
    x = dropout(norm(params, "enc.emb_ln", x), cfg.dropout, rng, training)
    for i in range(cfg.n_layers):
        p = f"enc.layers.{i}"
        a = attention(params, p + ".attn", x, x, batch.allowed, cfg.n_heads, record)
        x = residual_norm(params, p + ".ln1", x, a, cfg.dropout, rng, training)
        f = feed_forward(params, p + ".ffn", x, cfg.dropout, rng, training)
        x = residual_norm(params, p + ".ln2", x, f, cfg.dropout, rng, training)
    return x


def encode(inp: EncoderInput, params: Params, cfg: ModelConfig) -> EncoderOutput:
    """Inference-mode encoding of a single input."""
    with no_grad():
        h = encoder_forward(params, cfg, collate([inp]))
    if h.shape[-1] != cfg.d_model:
        from .numerics import ShapeMismatch

        raise ShapeMismatch("hidden width differs from d_model")
    return EncoderOutput(h.data[0, : len(inp)].copy(), inp.n_code, inp.n_vars)


def encode_pair(clean: FunctionDecl | str, current: FunctionDecl | str, vocab: Vocabulary, params: Params, cfg: ModelConfig) -> tuple[EncoderOutput, EncoderOutput]:
    """Encode both versions independently with the same weights."""
    a = function_input(clean, vocab, cfg.max_len)
    b = function_input(current, vocab, cfg.max_len)
    return encode(a, params, cfg), encode(b, params, cfg)
