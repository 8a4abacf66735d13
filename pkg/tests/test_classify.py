from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from compdefect.classify import (
    ClassifierOutput,
    classify_change,
    init_classifier,
    ntn_preactivation,
    ntn_relate,
    predict_label,
)
from compdefect.labels import DefectLabel, NUM_LABELS
from compdefect.numerics import ShapeMismatch, Tensor

from conftest import init_params, tiny_config


def test_seventeen_labels():
    assert NUM_LABELS == 17 and DefectLabel(0) is DefectLabel.CLEAN
    assert DefectLabel.parse("change_boolean_literal") is DefectLabel.CHANGE_BOOLEAN_LITERAL


def test_ntn_zero():
    out = ntn_relate(np.ones(3), np.ones(3), np.zeros((3, 4, 3)), np.zeros(4))
    assert np.array_equal(out.data, np.zeros(4))


def test_ntn_hand_value():
    gamma = np.eye(2)[:, None, :]  # d x 1 x d, slice 0 is the identity
    out = ntn_relate(np.array([3.0, 4.0]), np.array([1.0, 2.0]), gamma, np.zeros(1))
    assert out.data.tolist() == [11.0]


def test_ntn_bias_clamps():
    rng = np.random.default_rng(0)
    gamma = rng.normal(size=(4, 3, 4))
    out = ntn_relate(rng.normal(size=4) * 0.01, rng.normal(size=4) * 0.01, gamma, np.array([0.0, -1e6, 0.0]))
    assert out.data[1] == 0.0


def test_ntn_direction_of_gamma():
    # slice k is h_buggy^T Gamma_k h_clean, so an asymmetric Gamma exposes the order
    gamma = np.zeros((2, 1, 2))
    gamma[0, 0, 1] = 1.0  # picks h_buggy[0] * h_clean[1]
    out = ntn_preactivation(Tensor([5.0, 7.0]), Tensor([2.0, 3.0]), Tensor(gamma), Tensor([0.0]))
    assert out.data.tolist() == [2.0 * 7.0]


def test_ntn_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        ntn_relate(np.ones(3), np.ones(2), np.zeros((3, 1, 3)), np.zeros(1))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 5, elements=st.floats(-3, 3)), arrays(np.float64, 5, elements=st.floats(-3, 3)), st.integers(0, 1000))
def test_ntn_bilinear_pre_relu(hc, hb, seed):
    rng = np.random.default_rng(seed)
    gamma, b = Tensor(rng.normal(size=(5, 3, 5))), Tensor(np.zeros(3))
    one = ntn_preactivation(Tensor(hc), Tensor(hb), gamma, b).data
    two = ntn_preactivation(Tensor(2 * hc), Tensor(hb), gamma, b).data
    np.testing.assert_allclose(two, 2 * one, rtol=1e-12, atol=1e-12)


def test_zero_head_is_uniform():
    cfg = tiny_config(10)
    params = init_params(init_classifier, cfg)
    for k in ("cls.fuse.w", "cls.fuse.b", "cls.out.w", "cls.out.b"):
        params[k].data[...] = 0.0
    out = classify_change(np.ones(16), np.ones(16) * 2, params)
    np.testing.assert_allclose(out.probabilities, np.full(17, 1 / 17), rtol=0, atol=1e-15)
    assert predict_label(out) is DefectLabel.CLEAN


def test_h_change_width():
    cfg = tiny_config(10, d_model=64, n_slices=8, n_heads=4)
    params = init_params(init_classifier, cfg)
    assert params["cls.fuse.w"].shape[0] == 136


def test_toy_head_hand_evaluation():
    d, n = 2, 1
    hc, hb = [0.5, -1.0], [1.0, 0.25]
    gamma = [[[1.0, 0.0]], [[0.0, 2.0]]]  # Gamma_0 = [[1,0],[0,2]]
    W_e = [[0.1, -0.2], [0.3, 0.1], [0.0, 0.5], [-0.4, 0.2], [0.2, 0.2]]  # (n + 2d) x fused
    b_e = [0.05, -0.05]
    W_p = [[1.0] + [0.0] * 15 + [-1.0], [0.0, 2.0] + [0.0] * 15]  # fused x 17
    b_p = [0.0] * 16 + [0.3]
    params = {
        "cls.ntn.gamma": Tensor(gamma),
        "cls.ntn.b": Tensor([-0.1]),
        "cls.fuse.w": Tensor(W_e),
        "cls.fuse.b": Tensor(b_e),
        "cls.out.w": Tensor(W_p),
        "cls.out.b": Tensor(b_p),
    }
    # by hand: h_NT = relu(1*1*0.5 + 0.25*2*(-1) - 0.1) = relu(-0.1) = 0
    h_change = [0.0, 1.0, 0.25, 0.5, -1.0]
    e = [math.tanh(sum(h_change[i] * W_e[i][j] for i in range(5)) + b_e[j]) for j in range(2)]
    p = [sum(e[i] * W_p[i][k] for i in range(2)) + b_p[k] for k in range(17)]
    z = sum(math.exp(v) for v in p)
    y = [math.exp(v) / z for v in p]
    out = classify_change(np.array(hc), np.array(hb), params)
    np.testing.assert_allclose(out.fused, e, rtol=0, atol=1e-12)
    np.testing.assert_allclose(out.logits, p, rtol=0, atol=1e-12)
    np.testing.assert_allclose(out.probabilities, y, rtol=0, atol=1e-12)


def test_predict_label_examples():
    probs = np.full(17, 0.1 / 16)
    probs[7] = 0.9
    probs[0] = 0.0
    assert predict_label(probs) == 7
    assert predict_label(np.full(17, 1 / 17)) is DefectLabel.CLEAN


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 17, elements=st.floats(-20, 20)), st.floats(-50, 50), st.floats(0.1, 10))
def test_predict_label_monotone_invariance(logits, shift, scale):
    def label(p):
        e = np.exp(p - p.max())
        return predict_label(ClassifierOutput(e / e.sum(), np.zeros(1), p))

    assert label(logits) == label(logits + shift)
    assert label(logits) == label(scale * logits)


def test_simplex_and_asymmetry():
    cfg = tiny_config(10)
    params = init_params(init_classifier, cfg, seed=7)
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.normal(size=16), rng.normal(size=16)
        out = classify_change(a, b, params)
        assert np.all((out.probabilities > 0) & (out.probabilities < 1))
        assert abs(out.probabilities.sum() - 1) < 1e-6
        assert not np.allclose(out.probabilities, classify_change(b, a, params).probabilities)
