from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compdefect.metrics import (
    BleuConfig,
    ConfusionCounts,
    EmptyInput,
    LengthMismatch,
    SingleClass,
    auc_binary,
    auc_multiclass,
    bleu,
    confusion_counts,
    corpus_bleu,
    exact_match_accuracy,
    macro_average,
    macro_prf,
    mean_sentence_bleu,
    per_class_prf,
    precision_recall_f1,
)

N_CASES = 1000


# --- brute-force oracles ----------------------------------------------------


def oracle_prf(pred, gold, pos):
    tp = fp = fn = tn = 0
    for p, g in zip(pred, gold):
        if p == pos and g == pos:
            tp += 1
        elif p == pos:
            fp += 1
        elif g == pos:
            fn += 1
        else:
            tn += 1
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return (tp, fp, fn, tn), (prec, rec, f1)


def oracle_auc(scores, labels):
    wins = 0.0
    pairs = 0
    for i in range(len(scores)):
        for j in range(len(scores)):
            if labels[i] == 1 and labels[j] == 0:
                pairs += 1
                if scores[i] > scores[j]:
                    wins += 1
                elif scores[i] == scores[j]:
                    wins += 0.5
    return wins / pairs


def oracle_ovr(P, y):
    classes = sorted(set(y))
    return sum(oracle_auc([r[k] for r in P], [1 if v == k else 0 for v in y]) for k in classes) / len(classes)


def oracle_ovo(P, y):
    classes = sorted(set(y))
    vals = []
    for j, k in itertools.permutations(classes, 2):
        rows = [i for i in range(len(y)) if y[i] in (j, k)]
        vals.append(oracle_auc([P[i][j] for i in rows], [1 if y[i] == j else 0 for i in rows]))
    return sum(vals) / len(vals)


def oracle_bleu(cand, ref, n_max=4):
    log_p = 0.0
    for n in range(1, n_max + 1):
        cg = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
        rg = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
        if not cg:
            return 0.0
        used = [False] * len(rg)
        hit = 0
        for g in cg:
            for k, r in enumerate(rg):
                if not used[k] and r == g:
                    used[k] = True
                    hit += 1
                    break
        if hit == 0:
            return 0.0
        log_p += math.log(hit / len(cg)) / n_max
    bp = 1.0 if len(cand) > len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(log_p)


# --- worked examples ----------------------------------------------------------


def test_prf_worked():
    p, r, f = precision_recall_f1(ConfusionCounts(3, 1, 2, 0))
    assert (p, r) == (0.75, 0.6)
    assert f == pytest.approx(2 / 3, abs=1e-4)


def test_prf_zero_denominator():
    assert precision_recall_f1(ConfusionCounts(0, 0, 4, 1))[0] == 0.0
    assert precision_recall_f1(ConfusionCounts(0, 0, 0, 3)) == (0.0, 0.0, 0.0)


def test_prf_perfect():
    assert precision_recall_f1(ConfusionCounts(5, 0, 0, 2)) == (1.0, 1.0, 1.0)


def test_macro_average_examples():
    assert macro_average([1.0, 0.0]) == 0.5
    assert macro_average([0.37] * 5) == pytest.approx(0.37, abs=1e-15)
    with pytest.raises(EmptyInput):
        macro_average([])


def test_macro_average_seventeen():
    f1s = ["0.91", "0.85", "0.5", "0", "1", "0.333", "0.72", "0.64", "0.1", "0.99", "0.47", "0.58", "0.26", "0.805", "0.7", "0.05", "0.66"]
    exact = sum(Fraction(s) for s in f1s) / len(f1s)
    assert macro_average([float(s) for s in f1s]) == pytest.approx(float(exact), abs=1e-12)


def test_auc_examples():
    assert auc_binary([0.9, 0.8, 0.3, 0.2], [1, 0, 1, 0]) == 0.75
    assert auc_binary([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert auc_binary([0.5] * 6, [1, 0, 1, 0, 0, 1]) == 0.5
    with pytest.raises(SingleClass):
        auc_binary([0.1, 0.2], [1, 1])


def test_multiclass_examples():
    y = [0, 1, 2, 0, 1, 2]
    onehot = np.eye(3)[y]
    assert auc_multiclass(onehot, y, "ovo") == 1.0
    assert auc_multiclass(onehot, y, "ovr") == 1.0
    flat = np.full((6, 3), 1 / 3)
    assert auc_multiclass(flat, y, "ovo") == 0.5
    assert auc_multiclass(flat, y, "ovr") == 0.5
    with pytest.raises(SingleClass):
        auc_multiclass(onehot[:1], y[:1])


def test_multiclass_hand_matrix():
    P = [
        [0.6, 0.3, 0.1],
        [0.2, 0.5, 0.3],
        [0.3, 0.3, 0.4],
        [0.4, 0.4, 0.2],
        [0.1, 0.2, 0.7],
        [0.5, 0.1, 0.4],
    ]
    y = [0, 1, 2, 1, 2, 0]
    assert auc_multiclass(np.array(P), y, "ovo") == pytest.approx(oracle_ovo(P, y), abs=1e-12)
    assert auc_multiclass(np.array(P), y, "ovr") == pytest.approx(oracle_ovr(P, y), abs=1e-12)


def test_bleu_examples():
    assert bleu("a b c d e".split(), "a b c d e".split()) == 1.0
    assert bleu("a b c d".split(), "a b c e".split()) == 0.0
    c, r = "a b c d e".split(), "a b c d e f g h".split()
    assert bleu(c, r) == pytest.approx(math.exp(1 - 8 / 5), abs=1e-12)
    with pytest.raises(EmptyInput):
        bleu([], ["a"])


def test_bleu_smoothing_flag_differs():
    c, r = "a b c d".split(), "a b c e".split()
    assert bleu(c, r, BleuConfig(smooth=True)) > 0.0


def test_exact_match_examples():
    assert exact_match_accuracy(["a = 1 ;", "b", "c", "d"], ["a = 1 ;", "b", "x", "y"]) == 0.5
    assert exact_match_accuracy(["return   x+1 ;"], ["return x + 1;"]) == 1.0
    with pytest.raises(EmptyInput):
        exact_match_accuracy([], [])
    with pytest.raises(LengthMismatch):
        exact_match_accuracy(["a"], [])


# --- randomized oracle agreement ----------------------------------------------


def test_prf_oracle_random():
    rng = np.random.default_rng(11)
    for _ in range(N_CASES):
        n = int(rng.integers(1, 15))
        k = int(rng.integers(2, 5))
        pred = rng.integers(0, k, n).tolist()
        gold = rng.integers(0, k, n).tolist()
        pos = int(rng.integers(0, k))
        c = confusion_counts(pred, gold, pos)
        counts, prf = oracle_prf(pred, gold, pos)
        assert (c.tp, c.fp, c.fn, c.tn) == counts
        assert np.allclose(precision_recall_f1(c), prf, rtol=0, atol=1e-9)


def test_macro_oracle_random():
    rng = np.random.default_rng(12)
    for _ in range(N_CASES):
        n = int(rng.integers(1, 15))
        pred = rng.integers(0, 4, n).tolist()
        gold = rng.integers(0, 4, n).tolist()
        classes = sorted(set(gold))
        per = [oracle_prf(pred, gold, k)[1] for k in classes]
        expected = [sum(v[i] for v in per) / len(per) for i in range(3)]
        assert np.allclose(macro_prf(pred, gold), expected, rtol=0, atol=1e-9)
        assert set(per_class_prf(pred, gold)) == set(classes)


def test_auc_oracle_random():
    rng = np.random.default_rng(13)
    done = 0
    while done < N_CASES:
        n = int(rng.integers(2, 12))
        labels = rng.integers(0, 2, n).tolist()
        if len(set(labels)) < 2:
            continue
        scores = (rng.integers(0, 5, n) / 4).tolist()  # coarse grid forces ties
        assert auc_binary(scores, labels) == pytest.approx(oracle_auc(scores, labels), abs=1e-9)
        done += 1


def test_multiclass_oracle_random():
    rng = np.random.default_rng(14)
    done = 0
    while done < N_CASES:
        n = int(rng.integers(2, 10))
        k = int(rng.integers(2, 5))
        y = rng.integers(0, k, n).tolist()
        if len(set(y)) < 2:
            continue
        P = rng.dirichlet(np.ones(k), n).round(1).tolist()
        assert auc_multiclass(np.array(P), y, "ovo") == pytest.approx(oracle_ovo(P, y), abs=1e-9)
        assert auc_multiclass(np.array(P), y, "ovr") == pytest.approx(oracle_ovr(P, y), abs=1e-9)
        done += 1


def test_bleu_oracle_random():
    rng = np.random.default_rng(15)
    vocab = list("abcd")
    for _ in range(N_CASES):
        c = [vocab[i] for i in rng.integers(0, 4, int(rng.integers(1, 12)))]
        r = [vocab[i] for i in rng.integers(0, 4, int(rng.integers(1, 12)))]
        assert bleu(c, r) == pytest.approx(oracle_bleu(c, r), abs=1e-9)


def test_exact_match_oracle_random():
    rng = np.random.default_rng(16)
    alphabet = ["x", "y1", "=", "+", ";", "(", ")", "foo", "2"]
    for _ in range(N_CASES):
        n = int(rng.integers(1, 6))
        cands, refs, hits = [], [], 0
        for _ in range(n):
            toks = [alphabet[i] for i in rng.integers(0, len(alphabet), int(rng.integers(1, 7)))]
            other = list(toks) if rng.random() < 0.5 else [alphabet[i] for i in rng.integers(0, len(alphabet), len(toks))]
            hits += other == toks
            ws = lambda: " " * int(rng.integers(1, 4))  # noqa: E731
            cands.append(ws().join(toks))
            refs.append(ws().join(other))
        assert exact_match_accuracy(cands, refs) == pytest.approx(hits / n, abs=1e-12)


# --- properties -----------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 1)), min_size=2, max_size=20))
def test_auc_monotone_invariance(rows):
    scores = [s for s, _ in rows]
    labels = [l for _, l in rows]
    if len(set(labels)) < 2:
        return
    base = auc_binary(scores, labels)
    assert 0.0 <= base <= 1.0
    assert auc_binary([math.exp(s / 3) + 5 for s in scores], labels) == pytest.approx(base, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("abcde"), min_size=1, max_size=15), st.lists(st.sampled_from("abcde"), min_size=1, max_size=15))
def test_bleu_bounds(c, r):
    assert 0.0 <= bleu(c, r) <= 1.0 + 1e-12
    if len(c) >= 4:
        assert bleu(c, c) == pytest.approx(1.0, abs=1e-12)


def test_corpus_and_mean_bleu_agree_on_identity():
    docs = [list("abcde"), list("bcdea")]
    assert corpus_bleu(docs, docs) == pytest.approx(1.0)
    assert mean_sentence_bleu(docs, docs) == pytest.approx(1.0)
    assert mean_sentence_bleu([[], list("abcd")], [list("abcd"), list("abcd")]) == 0.5
