"""Distances to outlier probabilities, thresholds, flags and metrics.

Labels use 1 for the anomalous (counterfeit) class and 0 for normal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import distance_scores
from .network import forward_all


class DegenerateCalibrationError(ValueError):
    """Training distances are all zero, so no probability scale exists."""


class UncalibratedModelError(ValueError):
    pass


class UndefinedAUCError(ValueError):
    pass


@dataclass(frozen=True)
class Calibration:
    train_max_distance: float
    threshold: float
    nu: float

    def to_dict(self) -> dict:
        return {"train_max_distance": self.train_max_distance, "threshold": self.threshold, "nu": self.nu}

    @classmethod
    def from_dict(cls, d: dict) -> "Calibration":
        return cls(float(d["train_max_distance"]), float(d["threshold"]), float(d["nu"]))


@dataclass(frozen=True)
class MetricTriple:
    accuracy: float
    f1: float
    auc: float


def calibrate(train_scores: np.ndarray, nu: float) -> Calibration:
    """Scale by the largest training distance and threshold at the (1 - nu) quantile.

    The quantile interpolates linearly between the closest order statistics.
    """
    scores = np.asarray(train_scores, dtype=np.float64)
    if scores.size == 0:
        raise DegenerateCalibrationError("no training scores to calibrate on")
    top = float(scores.max())
    if not top > 0:
        raise DegenerateCalibrationError(f"largest training distance is {top}; cannot normalise")
    p = scores / top
    return Calibration(train_max_distance=top, threshold=float(np.quantile(p, 1.0 - nu)), nu=float(nu))


def probabilities(distances: np.ndarray, cal: Calibration, normalize: str = "train") -> np.ndarray:
    """``normalize="train"`` divides by the stored training maximum; ``"batch"`` by this batch's maximum."""
    distances = np.asarray(distances, dtype=np.float64)
    if normalize == "train":
        return distances / cal.train_max_distance
    if normalize == "batch":
        top = distances.max()
        return distances / top if top > 0 else np.zeros_like(distances)
    raise ValueError(f"unknown normalisation mode {normalize!r}")


def score_and_flag(model, x: np.ndarray, normalize: str = "train") -> tuple[np.ndarray, np.ndarray]:
    """Return ``(P, flags)`` for the rows of ``x``; ``P`` may exceed 1."""
    if getattr(model, "calibration", None) is None or getattr(model, "state", None) is None:
        raise UncalibratedModelError("model has no calibration; train it or load a calibrated model")
    h = forward_all(model.network, x)[-1]
    p = probabilities(distance_scores(h, model.spec, model.state), model.calibration, normalize)
    return p, (p > model.calibration.threshold).astype(np.int64)


def _pair(flags, labels) -> tuple[np.ndarray, np.ndarray]:
    flags = np.asarray(flags).astype(np.int64).ravel()
    labels = np.asarray(labels).astype(np.int64).ravel()
    if flags.shape != labels.shape:
        raise ValueError(f"length mismatch: {flags.size} predictions vs {labels.size} labels")
    return flags, labels


def accuracy(flags, labels) -> float:
    flags, labels = _pair(flags, labels)
    if flags.size == 0:
        raise ValueError("accuracy of an empty set")
    return float(np.mean(flags == labels))


def f1(flags, labels) -> float:
    flags, labels = _pair(flags, labels)
    tp = int(np.sum((flags == 1) & (labels == 1)))
    fp = int(np.sum((flags == 1) & (labels == 0)))
    fn = int(np.sum((flags == 0) & (labels == 1)))
    denom = 2 * tp + fp + fn
    # 2PR/(P+R) == 2TP/(2TP+FP+FN); zero when there are no true positives
    return 2.0 * tp / denom if tp > 0 else 0.0


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their mean rank."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(values.size, dtype=np.float64)
    boundaries = np.flatnonzero(np.diff(sorted_vals)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [values.size]])
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = 0.5 * (s + 1 + e)
    return ranks


def auc(scores, labels) -> float:
    """Mann-Whitney estimate of P(score_pos > score_neg), ties counted as 1/2."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).astype(np.int64).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"length mismatch: {scores.size} scores vs {labels.size} labels")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC needs both classes present")
    u = average_ranks(scores)[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate_metrics(p: np.ndarray, flags: np.ndarray, labels: np.ndarray) -> MetricTriple:
    try:
        a = auc(p, labels)
    except UndefinedAUCError:
        a = float("nan")
    return MetricTriple(accuracy(flags, labels), f1(flags, labels), a)
