"""Evaluation metrics for imbalanced binary classification.

The positive class is +1 throughout.  Balanced accuracy is the mean of
sensitivity tp/(tp+fn) and specificity tn/(tn+fp); the skew-insensitive
F-score is 2*tpr / (tpr + fpr + 1).  AUC is the rank statistic (ties count
one half), which equals the trapezoidal area under the ROC curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .dataset import LabeledDataset

__all__ = [
    "MetricError",
    "Confusion",
    "MetricsReport",
    "confusion",
    "accuracy",
    "bac",
    "sif",
    "sif_from_confusion",
    "auc",
    "recovery_rate",
    "metrics_report",
]


class MetricError(ValueError):
    """Metric undefined for the given inputs (empty class, length mismatch)."""


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check_labels(arr: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(arr)
    if not np.all(np.isin(arr, (-1, 1))):
        raise MetricError(f"{name} must contain only -1/+1 labels")
    return arr


def confusion(predicted, truth) -> Confusion:
    predicted = _check_labels(predicted, "predicted")
    truth = _check_labels(truth, "truth")
    if predicted.shape != truth.shape:
        raise MetricError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    pos = truth == 1
    pred_pos = predicted == 1
    return Confusion(
        tp=int(np.sum(pred_pos & pos)),
        fp=int(np.sum(pred_pos & ~pos)),
        tn=int(np.sum(~pred_pos & ~pos)),
        fn=int(np.sum(~pred_pos & pos)),
    )


def accuracy(c: Confusion) -> float:
    if c.total == 0:
        raise MetricError("no points")
    return (c.tp + c.tn) / c.total


def bac(c: Confusion) -> float:
    """Balanced accuracy (sensitivity + specificity) / 2."""
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        raise MetricError("balanced accuracy undefined: a class is empty")
    sensitivity = c.tp / (c.tp + c.fn)
    specificity = c.tn / (c.tn + c.fp)
    return 0.5 * (sensitivity + specificity)


def sif(tpr: float, fpr: float) -> float:
    """Skew-insensitive F-score 2*tpr / (tpr + fpr + 1)."""
    if not 0.0 <= tpr <= 1.0 or not 0.0 <= fpr <= 1.0:
        raise MetricError("rates must lie in [0, 1]")
    return 2.0 * tpr / (tpr + fpr + 1.0)


def sif_from_confusion(c: Confusion) -> float:
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        raise MetricError("skew-insensitive F-score undefined: a class is empty")
    return sif(c.tp / (c.tp + c.fn), c.fp / (c.fp + c.tn))


def auc(scores, truth) -> float:
    """Rank-based AUC of real-valued ``scores`` against -1/+1 ``truth``."""
    truth = _check_labels(truth, "truth")
    scores = np.asarray(scores, dtype=float)
    if scores.shape != truth.shape:
        raise MetricError(f"length mismatch: {scores.shape} vs {truth.shape}")
    n_pos = int(np.sum(truth == 1))
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC undefined: a class is empty")
    ranks = rankdata(scores, method="average")
    rank_sum = float(np.sum(ranks[truth == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def recovery_rate(d_tilde: LabeledDataset, d: LabeledDataset) -> float:
    """Fraction of points whose label in ``d_tilde`` matches ``d``.  The two
    datasets must hold identical feature vectors in identical order."""
    if d_tilde.features.shape != d.features.shape or not np.array_equal(
        d_tilde.features, d.features
    ):
        raise MetricError("feature vectors differ; recovery rate undefined")
    return float(np.mean(d_tilde.labels == d.labels))


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    bac: float
    sif: float
    auc: float | None
    confusion: Confusion

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "bac": self.bac,
            "sif": self.sif,
            "auc": self.auc,
            "tp": self.confusion.tp,
            "fp": self.confusion.fp,
            "tn": self.confusion.tn,
            "fn": self.confusion.fn,
        }


def metrics_report(predicted, truth, scores=None) -> MetricsReport:
    """Bundle the standard metrics; AUC is included when ``scores`` given."""
    c = confusion(predicted, truth)
    return MetricsReport(
        accuracy=accuracy(c),
        bac=bac(c),
        sif=sif_from_confusion(c),
        auc=None if scores is None else auc(scores, truth),
        confusion=c,
    )
