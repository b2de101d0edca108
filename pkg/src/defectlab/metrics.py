"""Confusion-matrix metrics, rank AUC, Balance and win/draw/loss tallies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "ConfusionMatrix",
    "MetricReport",
    "WdlRecord",
    "confusion_matrix",
    "metrics",
    "auc",
    "balance",
    "wdl",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are actual classes, columns predicted classes."""

    counts: np.ndarray
    classes: tuple[str, ...]
    positive: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if counts.shape[0] != len(self.classes):
            raise ValueError("class list does not match matrix size")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if not 0 <= self.positive < counts.shape[0]:
            raise ValueError("positive class index out of range")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return replace(self, counts=self.counts + other.counts)


def confusion_matrix(y_true, y_pred, classes, positive: int = 1) -> ConfusionMatrix:
    """Build from integer class indices ``0 .. len(classes) - 1``."""
    c = len(classes)
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    counts = np.zeros((c, c), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts, tuple(classes), positive)


@dataclass(frozen=True)
class MetricReport:
    """Scores for one evaluation (a fold, or the cross-validated aggregate).

    ``precision``/``recall``/``f_score`` are support-weighted class averages;
    per-class values live in ``per_class``. ``auc`` is None when undefined.
    """

    accuracy: float
    precision: float
    recall: float
    f_score: float
    balance: float
    pd: float
    pf: float
    auc: float | None = None
    train_time: float = 0.0
    test_time: float = 0.0
    per_class: dict = field(default_factory=dict)


def _div(a: float, b: float) -> float:
    return a / b if b else 0.0


def balance(pd: float, pf: float) -> float:
    """``1 - sqrt(pf^2 + (1 - pd)^2) / sqrt(2)``; 1 at (pd=1, pf=0)."""
    return 1.0 - math.sqrt(pf * pf + (1.0 - pd) ** 2) / math.sqrt(2.0)


def metrics(cm: ConfusionMatrix) -> MetricReport:
    total = cm.total
    if total < 1:
        raise ValueError("confusion matrix is empty")
    M = cm.counts.astype(float)
    tp = np.diag(M)
    support = M.sum(axis=1)
    predicted = M.sum(axis=0)
    precision = np.array([_div(tp[i], predicted[i]) for i in range(len(tp))])
    recall = np.array([_div(tp[i], support[i]) for i in range(len(tp))])
    f1 = np.array([_div(2 * p * r, p + r) for p, r in zip(precision, recall)])
    w = support / total

    pos = cm.positive
    fp = predicted[pos] - tp[pos]
    negatives = total - support[pos]
    pd = recall[pos]
    pf = _div(fp, negatives)
    per_class = {
        name: {"precision": float(precision[i]), "recall": float(recall[i]), "f_score": float(f1[i]), "support": int(support[i])}
        for i, name in enumerate(cm.classes)
    }
    return MetricReport(
        accuracy=float(tp.sum() / total),
        precision=float(w @ precision),
        recall=float(w @ recall),
        f_score=float(w @ f1),
        balance=balance(pd, pf),
        pd=float(pd),
        pf=float(pf),
        per_class=per_class,
    )


def auc(pos_scores, neg_scores) -> float | None:
    """Midrank AUC: probability a positive outscores a negative, ties half.

    Returns None when either list is empty.
    """
    pos = np.asarray(pos_scores, dtype=float).ravel()
    neg = np.asarray(neg_scores, dtype=float).ravel()
    n_pos, n_neg = pos.size, neg.size
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(np.concatenate([pos, neg]), method="average")
    r_pos = ranks[:n_pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class WdlRecord:
    wins: int
    draws: int
    losses: int
    epsilon: float = 1e-9

    def __str__(self) -> str:
        return f"{self.wins}/{self.draws}/{self.losses}"


def wdl(a, b, epsilon: float = 1e-9) -> WdlRecord:
    """Tally per-dataset wins/draws/losses of ``a`` against ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    d = a - b
    draws = int((np.abs(d) <= epsilon).sum())
    wins = int((d > epsilon).sum())
    return WdlRecord(wins, draws, a.size - wins - draws, epsilon)
