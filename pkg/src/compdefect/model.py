"""The joint model: shared encoder, change classifier and repair decoder."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import ClassifierOutput, classifier_forward, init_classifier
from .config import ModelConfig
from .decoder import (
    BeamHypothesis,
    CrossContext,
    PrefixTooLong,
    build_cross_context,
    decoder_forward,
    generate,
    init_decoder,
    project_e,
)
from .dfg import build_dfg
from .encoder import (
    EOS_ID,
    PAD_ID,
    SOS_ID,
    EncoderInput,
    EncoderOutput,
    Vocabulary,
    build_input,
    collate,
    encoder_forward,
    init_encoder,
)
from .jparse import FunctionDecl, format_tokens, parse_function
from .labels import DefectLabel
from .layers import Initializer, Params
from .numerics import Tensor, concat, getitem, no_grad, reshape, softmax
from .numerics import checkpoint as ckpt
from .triples import FunctionTriple


class TargetTooLong(PrefixTooLong):
    pass


def function_tokens(src: str | FunctionDecl) -> list[str]:
    fn = parse_function(src) if isinstance(src, str) else src
    return [t.text for t in fn.tokens]


@dataclass
class Example:
    clean: EncoderInput
    current: EncoderInput
    label: int
    target: tuple[int, ...]  # [SOS] fixed tokens [EOS]; empty when unknown
    source: FunctionTriple | None = None


@dataclass
class Forward:
    cls_logits: Tensor  # (B, num_labels)
    dec_logits: Tensor | None  # (B, T, V)
    tgt_out: np.ndarray | None  # (B, T)
    tgt_weights: np.ndarray | None  # (B, T), 0 on padding


@dataclass
class Prediction:
    label: DefectLabel
    probabilities: np.ndarray
    patch_tokens: list[str] | None = None
    patch_logprob: float | None = None

    @property
    def patch(self) -> str | None:
        return None if self.patch_tokens is None else format_tokens(self.patch_tokens)


def build_vocabulary(triples: Sequence[FunctionTriple], min_freq: int = 2) -> Vocabulary:
    streams = []
    for t in triples:
        for src in (t.clean_src, t.buggy_src, t.fixed_src):
            streams.append(function_tokens(src))
    return Vocabulary.build(streams, min_freq)


class CompDefectModel:
    def __init__(self, cfg: ModelConfig, vocab: Vocabulary, params: Params):
        self.cfg = cfg
        self.vocab = vocab
        self.params = params

    @classmethod
    def initialize(cls, cfg: ModelConfig, vocab: Vocabulary, seed: int = 0) -> "CompDefectModel":
        if cfg.vocab_size != len(vocab):
            raise ValueError("config vocab_size does not match the vocabulary")
        cfg.validate()
        params: Params = {}
        init = Initializer(params, np.random.default_rng(seed), cfg.init_range, np.dtype(cfg.dtype))
        init_encoder(init, cfg)
        init_classifier(init, cfg)
        init_decoder(init, cfg)
        return cls(cfg, vocab, params)

    # data -----------------------------------------------------------------

    def encoder_input(self, src: str | FunctionDecl) -> EncoderInput:
        fn = parse_function(src) if isinstance(src, str) else src
        return build_input([t.text for t in fn.tokens], build_dfg(fn), self.vocab, self.cfg.max_len)

    def target_ids(self, fixed_src: str) -> tuple[int, ...]:
        ids = (SOS_ID, *self.vocab.encode(function_tokens(fixed_src)), EOS_ID)
        if len(ids) - 1 > self.cfg.max_decode_len:
            raise TargetTooLong(f"target of {len(ids) - 2} tokens exceeds max_decode_len={self.cfg.max_decode_len}")
        return ids

    def example(self, triple: FunctionTriple) -> Example:
        return Example(
            self.encoder_input(triple.clean_src),
            self.encoder_input(triple.buggy_src),
            int(triple.label),
            self.target_ids(triple.fixed_src),
            triple,
        )

    # forward --------------------------------------------------------------

    def encode_batch(self, examples: Sequence[Example], training=False, rng=None, record=None):
        """One encoder pass over all clean then all current inputs."""
        B = len(examples)
        batch = collate([x.clean for x in examples] + [x.current for x in examples])
        h = encoder_forward(self.params, self.cfg, batch, training, rng, record)
        return h, batch, B

    def forward(self, examples: Sequence[Example], training: bool = False, rng=None, with_decoder: bool = True) -> Forward:
        h, batch, B = self.encode_batch(examples, training, rng)
        L, d = h.shape[1], h.shape[2]
        h_cls = reshape(getitem(h, (slice(None), 0)), (2 * B, d))
        h_clean = getitem(h_cls, slice(0, B))
        h_cur = getitem(h_cls, slice(B, 2 * B))
        logits, e = classifier_forward(self.params, h_clean, h_cur, self.cfg.dropout, rng, training)
        if not with_decoder:
            return Forward(logits, None, None, None)
        memory, mem_allowed = self._memory(e, h, batch.lengths, B)
        T = max(len(x.target) for x in examples) - 1
        tgt_in = np.full((B, T), PAD_ID, dtype=np.int64)
        tgt_out = np.full((B, T), PAD_ID, dtype=np.int64)
        weights = np.zeros((B, T))
        for b, x in enumerate(examples):
            n = len(x.target) - 1
            tgt_in[b, :n] = x.target[:-1]
            tgt_out[b, :n] = x.target[1:]
            weights[b, :n] = 1.0
        dec = decoder_forward(self.params, self.cfg, tgt_in, memory, mem_allowed, training, rng)
        return Forward(logits, dec, tgt_out, weights)

    def _memory(self, e: Tensor, h: Tensor, lengths: np.ndarray, B: int) -> tuple[Tensor, np.ndarray]:
        # memory row 0 is e; the rest are the current version's states after [CLS]
        L, d = h.shape[1], h.shape[2]
        e_d = project_e(self.params, e)
        rest = getitem(h, (slice(B, 2 * B), slice(1, L)))
        memory = concat([reshape(e_d, (B, 1, d)), rest], axis=1)
        allowed = np.zeros((B, L), dtype=bool)
        for b in range(B):
            allowed[b, : lengths[B + b]] = True
        return memory, allowed

    # inference ------------------------------------------------------------

    def classify(self, clean_src, current_src) -> tuple[ClassifierOutput, EncoderOutput]:
        x = Example(self.encoder_input(clean_src), self.encoder_input(current_src), 0, ())
        with no_grad():
            h, batch, _ = self.encode_batch([x])
            h_clean, h_cur = h.data[0, 0], h.data[1, 0]
            logits, e = classifier_forward(self.params, Tensor(h_clean[None]), Tensor(h_cur[None]))
            probs = softmax(logits).data[0]
        n = len(x.current)
        enc_cur = EncoderOutput(h.data[1, :n].copy(), x.current.n_code, x.current.n_vars)
        return ClassifierOutput(probs, e.data[0], logits.data[0]), enc_cur

    def cross_context(self, out: ClassifierOutput, enc_cur: EncoderOutput) -> CrossContext:
        return build_cross_context(out.fused, enc_cur, self.params)

    def predict(self, clean_src, current_src, beam_width: int = 10, always_generate: bool = False, max_len: int | None = None) -> Prediction:
        out, enc_cur = self.classify(clean_src, current_src)
        label = DefectLabel(int(np.argmax(out.probabilities)))
        pred = Prediction(label, out.probabilities)
        if label is not DefectLabel.CLEAN or always_generate:
            best = generate(self.cross_context(out, enc_cur), self.params, self.cfg, SOS_ID, EOS_ID, beam_width, max_len)[0]
            pred.patch_tokens = self.detokenize(best)
            pred.patch_logprob = best.logprob
        return pred

    def detokenize(self, hyp: BeamHypothesis | Sequence[int]) -> list[str]:
        ids = hyp.ids if isinstance(hyp, BeamHypothesis) else hyp
        body = [i for i in ids[1:] if i != EOS_ID] if ids and ids[0] == SOS_ID else [i for i in ids if i != EOS_ID]
        return self.vocab.decode(body, strip_special=False)

    def greedy_batch(self, examples: Sequence[Example], max_len: int | None = None) -> tuple[np.ndarray, list[list[str]]]:
        """Label probabilities and greedy repairs for a batch, decoded in lockstep."""
        limit = min(max_len or self.cfg.max_decode_len, self.cfg.max_decode_len)
        with no_grad():
            h, batch, B = self.encode_batch(examples)
            h_cls = h.data[:, 0]
            logits, e = classifier_forward(self.params, Tensor(h_cls[:B]), Tensor(h_cls[B:]))
            probs = softmax(logits).data
            memory, allowed = self._memory(e, h, batch.lengths, B)
            seqs = np.full((B, 1), SOS_ID, dtype=np.int64)
            done = np.zeros(B, dtype=bool)
            for _ in range(limit):
                logit = decoder_forward(self.params, self.cfg, seqs, memory, allowed).data[:, -1]
                nxt = np.where(done, PAD_ID, np.argmax(logit, axis=-1))
                seqs = np.concatenate([seqs, nxt[:, None]], axis=1)
                done |= nxt == EOS_ID
                if done.all():
                    break
        outs = []
        for row in seqs:
            toks = []
            for i in row[1:]:
                if i in (EOS_ID, PAD_ID):
                    break
                toks.append(int(i))
            outs.append(self.vocab.decode(toks, strip_special=False))
        return probs, outs

    # persistence ----------------------------------------------------------

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def to_bytes(self, extra: dict | None = None) -> bytes:
        return ckpt.dumps(self.cfg.to_dict(), self.vocab.to_list(), self.state(), extra)

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        Path(path).write_bytes(self.to_bytes(extra))

    @classmethod
    def from_bytes(cls, buf: bytes) -> tuple["CompDefectModel", dict]:
        config, vocab, tensors, extra = ckpt.loads(buf)
        cfg = ModelConfig.from_dict(config)
        voc = Vocabulary.from_list(vocab)
        fresh = cls.initialize(cfg, voc, 0)
        if set(fresh.params) != set(tensors):
            raise ckpt.CheckpointError("checkpoint tensors do not match the configured model")
        for k, p in fresh.params.items():
            if p.data.shape != tensors[k].shape:
                raise ckpt.CheckpointError(f"shape mismatch for {k}")
            p.data = tensors[k].copy()
        return fresh, extra

    @classmethod
    def load(cls, path: str | Path) -> tuple["CompDefectModel", dict]:
        try:
            buf = Path(path).read_bytes()
        except OSError as exc:
            raise ckpt.CheckpointError(str(exc)) from exc
        return cls.from_bytes(buf)
