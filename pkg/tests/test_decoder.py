from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from compdefect.decoder import (
    BeamHypothesis,
    CrossContext,
    PrefixTooLong,
    beam_search,
    build_cross_context,
    decode_log_probs,
    decode_step,
    decoder_forward,
    generate,
    greedy_search,
    init_decoder,
    model_step_fn,
)
from compdefect.encoder import EncoderOutput, SOS_ID
from compdefect.model import CompDefectModel, build_vocabulary
from compdefect.numerics import ShapeMismatch, Tensor, add, embedding, no_grad
from compdefect.triples import FunctionTriple
from compdefect.labels import DefectLabel

from conftest import SAMPLE_FUNCTIONS, init_params, tiny_config


def enc_out(n_code=5, n_vars=2, d=16, seed=0):
    rng = np.random.default_rng(seed)
    return EncoderOutput(rng.normal(size=(1 + n_code + 1 + n_vars, d)), n_code, n_vars)


def test_memory_layout():
    enc = enc_out()
    ctx = build_cross_context(np.ones(16), enc)
    assert ctx.memory.shape == (9, 16)
    np.testing.assert_array_equal(ctx.memory[1:], enc.hidden[1:])


def test_zero_e_only_first_row_zero():
    ctx = build_cross_context(np.zeros(16), enc_out())
    assert not ctx.memory[0].any()
    assert all(ctx.memory[i].any() for i in range(1, 9))


def test_e_changes_only_row_zero():
    enc = enc_out()
    a = build_cross_context(np.full(16, 0.5), enc).memory
    b = build_cross_context(np.full(16, -2.0), enc).memory
    assert (a != b).any(axis=1).tolist() == [True] + [False] * 8


def test_e_width_mismatch():
    with pytest.raises(ShapeMismatch):
        build_cross_context(np.zeros(8), enc_out())


def test_e_projection_when_widths_differ():
    cfg = tiny_config(7, fused_dim=8)
    params = init_params(init_decoder, cfg)
    ctx = build_cross_context(np.ones(8), enc_out(), params)
    w, b = params["dec.proj_e.w"].data, params["dec.proj_e.b"].data
    np.testing.assert_allclose(ctx.memory[0], np.ones(8) @ w + b, rtol=0, atol=1e-12)


def _model(V=7, seed=0, **kw):
    cfg = tiny_config(V, **kw)
    params = init_params(init_decoder, cfg, seed=seed)
    ctx = CrossContext(np.random.default_rng(seed + 100).normal(size=(6, cfg.d_model)))
    return cfg, params, ctx


def test_decode_step_simplex():
    cfg, params, ctx = _model()
    rng = np.random.default_rng(1)
    for n in range(1, 8):
        p = decode_step([SOS_ID, *rng.integers(0, 7, n - 1)], ctx, params, cfg)
        assert p.shape == (7,) and np.all(p >= 0)
        assert abs(p.sum() - 1) < 1e-6


def test_decode_step_errors():
    cfg, params, ctx = _model(max_decode_len=3)
    with pytest.raises(ShapeMismatch):
        decode_step([], ctx, params, cfg)
    with pytest.raises(ShapeMismatch):
        decode_step([1, 2], ctx, params, cfg, sos_id=SOS_ID)
    with pytest.raises(PrefixTooLong):
        decode_step([SOS_ID, 1, 1, 1], ctx, params, cfg)


def test_causal_mask_future_embedding():
    cfg, params, ctx = _model()
    ids = np.array([[SOS_ID, 1, 2, 3, 6]])
    mem = Tensor(ctx.memory[None])
    allowed = np.ones((1, len(ctx)), dtype=bool)
    with no_grad():
        emb = add(embedding(params["dec.tok_emb"], ids), embedding(params["dec.pos_emb"], np.arange(5)))
        base = decoder_forward(params, cfg, ids, mem, allowed, embedded=emb).data[0]
        for t in range(4):
            x = emb.data.copy()
            x[0, t + 1 :] += np.random.default_rng(t).normal(0, 3.0, x[0, t + 1 :].shape)
            out = decoder_forward(params, cfg, ids, mem, allowed, embedded=Tensor(x)).data[0]
            np.testing.assert_array_equal(out[: t + 1], base[: t + 1])
            assert not np.array_equal(out[t + 1], base[t + 1])


def test_toy_three_token_hand_evaluation():
    cfg = tiny_config(3, d_model=2, n_heads=1, d_ff=2, dec_layers=1, max_decode_len=4)
    params = init_params(init_decoder, cfg, seed=2)
    # a zero gain on the last norm pins every hidden state to its bias
    params["dec.layers.0.ln3.g"].data[...] = 0.0
    params["dec.layers.0.ln3.b"].data[...] = [0.5, -1.0]
    params["dec.head.w"].data[...] = [[1.0, 0.5], [0.0, 2.0]]
    params["dec.head.b"].data[...] = [0.1, 0.0]
    params["dec.out.w"].data[...] = [[1.0, 0.0, -1.0], [0.0, 1.0, 1.0]]
    params["dec.out.b"].data[...] = [0.0, 0.0, 0.1]
    ctx = CrossContext(np.random.default_rng(0).normal(size=(4, 2)))
    e1 = math.tanh(0.5 * 1.0 + -1.0 * 0.0 + 0.1)
    e2 = math.tanh(0.5 * 0.5 + -1.0 * 2.0)
    p = [e1, e2, -e1 + e2 + 0.1]
    z = sum(math.exp(v) for v in p)
    want = [math.exp(v) / z for v in p]
    for prefix in ([0], [0, 2], [0, 1, 1]):
        np.testing.assert_allclose(decode_step(prefix, ctx, params, cfg), want, rtol=0, atol=1e-12)


# toy step functions ---------------------------------------------------------


def table_step(V, seed, temperature=1.0):
    """Context-dependent random next-token log-probs, fixed per prefix."""

    def row(prefix):
        rng = np.random.default_rng([seed, *prefix])
        x = rng.normal(size=V) * temperature
        return x - np.log(np.exp(x).sum())

    return lambda prefixes: np.stack([row(p) for p in prefixes])


def enumerate_outcomes(step, V, sos, eos, max_len):
    """All sequences a search can end with, each with its exact log-prob."""
    out = []
    for n in range(1, max_len + 1):
        for toks in itertools.product(range(V), repeat=n):
            if eos in toks[:-1]:
                continue
            if toks[-1] != eos and n < max_len:
                continue
            ids, lp = (sos,), 0.0
            for t in toks:
                lp += float(step([ids])[0][t])
                ids += (t,)
            out.append((ids, lp))
    return sorted(out, key=lambda r: (-r[1], r[0]))


@pytest.mark.parametrize("seed", range(10))
def test_beam_matches_exhaustive_enumeration(seed):
    step = table_step(3, seed)
    truth = enumerate_outcomes(step, 3, sos=3, eos=2, max_len=3)
    assert len(truth) == 15
    got = beam_search(step, sos=3, eos=2, width=27, max_len=3)
    assert [h.ids for h in got] == [ids for ids, _ in truth]
    np.testing.assert_allclose([h.logprob for h in got], [lp for _, lp in truth], rtol=0, atol=1e-12)
    assert [h.finished for h in got] == [ids[-1] == 2 for ids, _ in truth]


def test_beam_matches_enumeration_on_decoder():
    cfg, params, ctx = _model(V=3, seed=4, max_decode_len=8)
    step = model_step_fn(ctx, params, cfg)
    truth = enumerate_outcomes(step, 3, sos=0, eos=2, max_len=3)
    got = beam_search(step, sos=0, eos=2, width=27, max_len=3)
    assert [h.ids for h in got] == [ids for ids, _ in truth]
    np.testing.assert_allclose([h.logprob for h in got], [lp for _, lp in truth], rtol=0, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_width_one_is_greedy(seed):
    step = table_step(5, seed)
    (b,) = beam_search(step, sos=5, eos=0, width=1, max_len=6)
    g = greedy_search(step, sos=5, eos=0, max_len=6)
    assert b.ids == g.ids and b.finished == g.finished
    assert b.logprob == pytest.approx(g.logprob, abs=1e-12)


def test_generate_width_one_uses_greedy_and_respects_limit():
    cfg, params, ctx = _model(max_decode_len=5)
    (h,) = generate(ctx, params, cfg, SOS_ID, 5, width=1)
    assert len(h.ids) <= 6
    beams = generate(ctx, params, cfg, SOS_ID, 5, width=3, max_len=50)
    assert all(len(b.ids) <= 6 for b in beams)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12), st.integers(2, 6), st.integers(1, 5))
def test_beam_ranked_and_bounded(seed, width, V, max_len):
    beams = beam_search(table_step(V, seed), sos=V, eos=0, width=width, max_len=max_len)
    lps = [h.logprob for h in beams]
    assert lps == sorted(lps, reverse=True)
    assert all(lp <= 0 for lp in lps) and len(beams) <= width
    for h in beams:
        assert h.ids[0] == V and len(h.ids) <= max_len + 1
        assert h.finished == (h.ids[-1] == 0)
        assert 0 not in h.ids[1:-1]


# fails: width 1 reaches -3.762 on this table, width 2 only -3.776
@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(0, 6), st.integers(2, 5), st.integers(2, 5))
@example(seed=1190, w1=1, extra=1, V=4, max_len=4)
def test_wider_beam_never_worse(seed, w1, extra, V, max_len):
    step = table_step(V, seed)
    a = beam_search(step, sos=V, eos=0, width=w1, max_len=max_len)[0]
    b = beam_search(step, sos=V, eos=0, width=w1 + extra, max_len=max_len)[0]
    assert a.logprob <= b.logprob + 1e-12


def test_train_infer_parity():
    triples = [FunctionTriple(f"t{i}", "r", "c", None, DefectLabel.CLEAN, s, s, s, 1, 1, "A.java") for i, s in enumerate(SAMPLE_FUNCTIONS)]
    vocab = build_vocabulary(triples, min_freq=1)
    model = CompDefectModel.initialize(tiny_config(len(vocab)), vocab, seed=9)
    x = model.example(triples[2])
    with no_grad():
        fwd = model.forward([x])
    teacher = fwd.dec_logits.data[0]
    out, enc = model.classify(triples[2].clean_src, triples[2].buggy_src)
    ctx = model.cross_context(out, enc)
    for t in range(len(x.target) - 1):
        want = teacher[t] - np.log(np.exp(teacher[t] - teacher[t].max()).sum()) - teacher[t].max()
        got = decode_log_probs([x.target[: t + 1]], ctx, model.params, model.cfg)[0]
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)
    assert isinstance(generate(ctx, model.params, model.cfg, SOS_ID, 5, 2, 4)[0], BeamHypothesis)
