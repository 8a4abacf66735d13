from __future__ import annotations

import numpy as np
import pytest

from compdefect.config import ModelConfig
from compdefect.encoder import Vocabulary
from compdefect.jparse import tokenize
from compdefect.layers import Initializer


SAMPLE_FUNCTIONS = (
    "int f(int x) { int y = x + 1; return y; }",
    "int f(int x) { int y = x + 2; return y; }",
    "boolean ok(int n) { boolean r = true; if (n > 0) { r = false; } return r; }",
)


def tiny_config(vocab_size: int, **kw) -> ModelConfig:
    base = dict(
        vocab_size=vocab_size,
        d_model=16,
        n_layers=2,
        n_heads=2,
        d_ff=32,
        dec_layers=2,
        n_slices=3,
        max_len=64,
        max_decode_len=64,
        dropout=0.0,
        init_range=0.3,
    )
    base.update(kw)
    return ModelConfig(**base)


def sample_vocab() -> Vocabulary:
    return Vocabulary.build([[t.text for t in tokenize(s)] for s in SAMPLE_FUNCTIONS], min_freq=1)


def init_params(fn, cfg: ModelConfig, seed: int = 0) -> dict:
    params: dict = {}
    fn(Initializer(params, np.random.default_rng(seed), cfg.init_range, np.dtype(cfg.dtype)), cfg)
    return params


@pytest.fixture
def vocab() -> Vocabulary:
    return sample_vocab()
