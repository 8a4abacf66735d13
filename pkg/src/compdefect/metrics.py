"""Evaluation measures for identification, classification and repair."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .jparse import JParseError, join_tokens, tokenize


class MetricError(ValueError):
    pass


class EmptyInput(MetricError):
    pass


class SingleClass(MetricError):
    pass


class LengthMismatch(MetricError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion_counts(predicted: Sequence[Hashable], gold: Sequence[Hashable], positive: Hashable) -> ConfusionCounts:
    if len(predicted) != len(gold):
        raise LengthMismatch("predictions and gold labels differ in length")
    tp = fp = fn = tn = 0
    for p, g in zip(predicted, gold):
        if p == positive:
            if g == positive:
                tp += 1
            else:
                fp += 1
        elif g == positive:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def _div(a: float, b: float) -> float:
    return a / b if b else 0.0


def precision_recall_f1(c: ConfusionCounts) -> tuple[float, float, float]:
    p = _div(c.tp, c.tp + c.fp)
    r = _div(c.tp, c.tp + c.fn)
    return p, r, _div(2 * p * r, p + r)


def macro_average(scores: Sequence[float]) -> float:
    if len(scores) == 0:
        raise EmptyInput("macro average of no classes")
    return float(sum(scores) / len(scores))


def per_class_prf(predicted, gold) -> dict[Hashable, tuple[float, float, float]]:
    """P/R/F1 for every class that occurs in ``gold``."""
    if not len(gold):
        raise EmptyInput("no samples")
    return {k: precision_recall_f1(confusion_counts(predicted, gold, k)) for k in sorted(set(gold))}


def macro_prf(predicted, gold) -> tuple[float, float, float]:
    per = per_class_prf(predicted, gold).values()
    return tuple(macro_average([s[i] for s in per]) for i in range(3))  # type: ignore[return-value]


def auc_binary(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability a random positive outscores a random negative, ties 1/2.

    Computed from midranks in O(n log n).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise LengthMismatch("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both positive and negative samples")
    order = np.argsort(s, kind="mergesort")
    ss = s[order]
    ranks = np.empty(s.size, dtype=np.float64)
    i = 0
    while i < ss.size:
        j = i
        while j + 1 < ss.size and ss[j + 1] == ss[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_multiclass(prob: np.ndarray, labels: Sequence[int], mode: str = "ovr") -> float:
    prob = np.asarray(prob, dtype=np.float64)
    y = np.asarray(labels)
    if prob.ndim != 2 or prob.shape[0] != y.size:
        raise LengthMismatch("probability matrix rows must match labels")
    classes = sorted(set(int(v) for v in y))
    if len(classes) < 2:
        raise SingleClass("multiclass AUC needs at least two classes present")
    mode = mode.lower()
    if mode == "ovr":
        return macro_average([auc_binary(prob[:, k], y == k) for k in classes])
    if mode == "ovo":
        vals = []
        for j in classes:
            for k in classes:
                if j == k:
                    continue
                sel = (y == j) | (y == k)
                vals.append(auc_binary(prob[sel, j], y[sel] == j))
        return macro_average(vals)
    raise ValueError(f"unknown AUC mode {mode!r}")


@dataclass(frozen=True)
class BleuConfig:
    max_gram: int = 4
    weights: tuple[float, ...] | None = None
    smooth: bool = False

    def resolved_weights(self) -> tuple[float, ...]:
        if self.max_gram < 1:
            raise ValueError("max_gram must be >= 1")
        w = self.weights or tuple(1.0 / self.max_gram for _ in range(self.max_gram))
        if len(w) != self.max_gram or any(x <= 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("BLEU weights must be positive, one per order, summing to 1")
        return tuple(w)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped(candidate, reference, n) -> tuple[int, int]:
    c, r = _ngrams(candidate, n), _ngrams(reference, n)
    return sum(min(v, r[g]) for g, v in c.items()), max(len(candidate) - n + 1, 0)


def _bleu_from_stats(matches, totals, c_len, r_len, cfg: BleuConfig) -> float:
    w = cfg.resolved_weights()
    log_sum = 0.0
    for i, (m, t) in enumerate(zip(matches, totals)):
        if cfg.smooth and i > 0:
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            return 0.0
        log_sum += w[i] * math.log(m / t)
    bp = 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)
    return float(bp * math.exp(log_sum))


def bleu(candidate: Sequence[str], reference: Sequence[str], cfg: BleuConfig = BleuConfig()) -> float:
    if not candidate or not reference:
        raise EmptyInput("BLEU needs a non-empty candidate and reference")
    stats = [_clipped(candidate, reference, n) for n in range(1, cfg.max_gram + 1)]
    return _bleu_from_stats([s[0] for s in stats], [s[1] for s in stats], len(candidate), len(reference), cfg)


def corpus_bleu(candidates, references, cfg: BleuConfig = BleuConfig()) -> float:
    if len(candidates) != len(references):
        raise LengthMismatch("candidates and references differ in length")
    if not candidates:
        raise EmptyInput("no candidates")
    matches = [0] * cfg.max_gram
    totals = [0] * cfg.max_gram
    c_len = r_len = 0
    for c, r in zip(candidates, references):
        c_len += len(c)
        r_len += len(r)
        for n in range(1, cfg.max_gram + 1):
            m, t = _clipped(c, r, n)
            matches[n - 1] += m
            totals[n - 1] += t
    if c_len == 0 or r_len == 0:
        raise EmptyInput("empty corpus")
    return _bleu_from_stats(matches, totals, c_len, r_len, cfg)


def mean_sentence_bleu(candidates, references, cfg: BleuConfig = BleuConfig()) -> float:
    if len(candidates) != len(references):
        raise LengthMismatch("candidates and references differ in length")
    if not candidates:
        raise EmptyInput("no candidates")
    # an empty generation scores 0 rather than aborting the whole evaluation
    return float(np.mean([bleu(c, r, cfg) if c else 0.0 for c, r in zip(candidates, references)]))


def normalize_code(text: str | Sequence[str]) -> str:
    if not isinstance(text, str):
        text = " ".join(text)
    try:
        return join_tokens(tokenize(text))
    except JParseError:
        return " ".join(text.split())


def exact_match_accuracy(candidates, references) -> float:
    if len(candidates) != len(references):
        raise LengthMismatch("candidates and references differ in length")
    if not candidates:
        raise EmptyInput("no candidates")
    hits = sum(normalize_code(c) == normalize_code(r) for c, r in zip(candidates, references))
    return hits / len(candidates)
