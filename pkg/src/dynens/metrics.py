"""Classification reports, confusion matrices, and the Wilcoxon signed-rank test."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import validate_labels
from .errors import AllPairsEqual, EmptyMatrix, LengthMismatch

#: Largest effective sample size for which the exact Wilcoxon null
#: distribution is computed; 2^20 sign patterns is still cheap.
EXACT_WILCOXON_LIMIT = 20


def confusion(y_true, y_pred, num_classes: int) -> np.ndarray:
    """Confusion matrix of integer counts; rows = true class, cols = predicted."""
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape or t.ndim != 1:
        raise LengthMismatch(f"y_true shape {t.shape} != y_pred shape {p.shape}")
    t = validate_labels(t, num_classes)
    p = validate_labels(p, num_classes)
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


@dataclass(frozen=True)
class MetricTriple:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class ClassificationReport:
    """Per-class precision/recall/F1/support plus accuracy and averages.

    The zero-division convention is 0 everywhere (a class with no predicted
    or no true instances scores 0, not NaN), so reports on degenerate classes
    stay comparable. weighted_avg is the support-weighted mean; its recall
    always equals accuracy.
    """

    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro_avg: MetricTriple
    weighted_avg: MetricTriple

    def to_dict(self) -> dict:
        return {
            "per_class": [
                {
                    "class": i,
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                    "support": int(self.support[i]),
                }
                for i in range(len(self.support))
            ],
            "accuracy": self.accuracy,
            "macro_avg": self.macro_avg.to_dict(),
            "weighted_avg": self.weighted_avg.to_dict(),
        }


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def report(cm) -> ClassificationReport:
    """Build a classification report from a confusion matrix."""
    m = np.asarray(cm)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise EmptyMatrix(f"confusion matrix must be square, got shape {m.shape}")
    total = m.sum()
    if total <= 0:
        raise EmptyMatrix("confusion matrix has no counts")
    m = m.astype(np.float64)

    tp = np.diag(m)
    support = m.sum(axis=1)
    predicted = m.sum(axis=0)
    precision = _safe_div(tp, predicted)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    accuracy = float(tp.sum() / total)

    share = support / total
    macro = MetricTriple(float(precision.mean()), float(recall.mean()), float(f1.mean()))
    weighted = MetricTriple(
        float((precision * share).sum()),
        float((recall * share).sum()),
        float((f1 * share).sum()),
    )
    return ClassificationReport(
        precision=precision,
        recall=recall,
        f1=f1,
        support=support.astype(np.int64),
        accuracy=accuracy,
        macro_avg=macro,
        weighted_avg=weighted,
    )


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n_effective: int
    method: str  # "exact" or "normal"

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n_effective": self.n_effective,
            "method": self.method,
        }


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of the ranks they span."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_two_sided_p(ranks: np.ndarray, w_min: float) -> float:
    # Average ranks are multiples of 1/2; doubling makes them exact integers,
    # so the W+ null distribution is an integer count array built by
    # polynomial (subset-sum) convolution over the 2^n sign assignments.
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    total2 = int(r2.sum())
    counts = np.zeros(total2 + 1, dtype=np.int64)
    counts[0] = 1
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total2 + 1 - r]
        counts = counts + shifted
    w2 = int(np.rint(2.0 * w_min))
    # min(W+, W-) <= w  <=>  W+ <= w or W+ >= total - w
    hits = int(counts[: w2 + 1].sum()) + int(counts[total2 - w2 :].sum())
    return min(hits / float(2 ** len(ranks)), 1.0)


def _normal_two_sided_p(ranks: np.ndarray, w_min: float) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: each group of t tied |differences| removes (t^3 - t)/48
    _, tie_counts = np.unique(ranks, return_counts=True)
    var -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
    sd = math.sqrt(var)
    z = (w_min - mean + 0.5) / sd  # continuity correction toward the mean
    return min(2.0 * 0.5 * math.erfc(-z / math.sqrt(2.0)), 1.0)


def wilcoxon_signed_rank(x, y) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired observations.

    Zero differences are dropped; tied absolute differences get average
    ranks; the statistic is W = min(W+, W-). For n_effective <=
    EXACT_WILCOXON_LIMIT the p-value is exact over all 2^n sign assignments,
    above that a normal approximation with tie correction and continuity
    correction is used.

    Raises AllPairsEqual when every pair is identical (nothing to test).
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise LengthMismatch(f"need equal-length 1-D samples, got {a.shape} and {b.shape}")
    diff = a - b
    diff = diff[diff != 0.0]
    n = diff.size
    if n == 0:
        raise AllPairsEqual("all pairs are equal; the signed-rank test is undefined")

    ranks = _average_ranks(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    w = min(w_plus, w_minus)

    if n <= EXACT_WILCOXON_LIMIT:
        return WilcoxonResult(w, _exact_two_sided_p(ranks, w), n, "exact")
    return WilcoxonResult(w, _normal_two_sided_p(ranks, w), n, "normal")
