"""One-class goodness losses evaluated on a layer's activations ``h``.

Five objectives are supported, all minimised during training:

========================  ==================================================
``goodness``              sum_i sigmoid(||h_i||^2 - C)
``goodness_adjusted``     sum_i log(1 + exp(||h_i||^2 - C))
``hb_svdd``               sum_i ||h_i - a||^2
``svdd``                  R^2 + C sum_i max(0, ||h_i - a||^2 - R^2)
``ls_svdd``               R^2 + C/2 sum_i (||h_i - a||^2 - R^2)^2
========================  ==================================================

``a`` is the column mean of the calibration batch and ``R^2`` the
``(1 - nu)`` quantile of the squared distances to ``a``. Both are held fixed
when differentiating.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .tensor import EmptyBatchError, ShapeError, col_means, row_sq_norms


class LossKind(str, enum.Enum):
    GOODNESS = "goodness"
    GOODNESS_ADJUSTED = "goodness_adjusted"
    HB_SVDD = "hb_svdd"
    SVDD = "svdd"
    LS_SVDD = "ls_svdd"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def uses_center(self) -> bool:
        return self in (LossKind.HB_SVDD, LossKind.SVDD, LossKind.LS_SVDD)

    @property
    def uses_radius(self) -> bool:
        return self in (LossKind.SVDD, LossKind.LS_SVDD)


_LABELS = {
    LossKind.GOODNESS: "Goodness",
    LossKind.GOODNESS_ADJUSTED: "GoodnessAdjusted",
    LossKind.HB_SVDD: "HB-SVDD",
    LossKind.SVDD: "SVDD",
    LossKind.LS_SVDD: "LS-SVDD",
}

LOSS_ORDER = tuple(LossKind)


def default_c(kind: LossKind) -> float:
    """2.0 where C is a norm threshold, 1.0 where it is a penalty weight."""
    return 1.0 if LossKind(kind).uses_radius else 2.0


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    c: float | None = None
    nu: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if self.c is None:
            object.__setattr__(self, "c", default_c(self.kind))
        object.__setattr__(self, "c", float(self.c))
        if not np.isfinite(self.c):
            raise ValueError(f"C must be finite, got {self.c}")
        if self.kind.uses_radius and self.c <= 0:
            raise ValueError(f"{self.kind.label} needs a positive penalty weight C, got {self.c}")
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"nu must lie in (0, 1), got {self.nu}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "c": self.c, "nu": self.nu}

    @classmethod
    def from_dict(cls, d: dict) -> "LossSpec":
        return cls(kind=LossKind(d["kind"]), c=d.get("c"), nu=d.get("nu", 0.05))


@dataclass(frozen=True)
class LossState:
    center: np.ndarray
    radius_sq: float = 0.0

    def __post_init__(self):
        center = np.array(self.center, dtype=np.float64)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius_sq", float(self.radius_sq))
        if self.radius_sq < 0:
            raise ValueError(f"radius_sq must be non-negative, got {self.radius_sq}")

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "radius_sq": self.radius_sq}

    @classmethod
    def from_dict(cls, d: dict) -> "LossState":
        return cls(center=np.array(d["center"], dtype=np.float64), radius_sq=d["radius_sq"])


@dataclass(frozen=True)
class LossEval:
    per_sample: np.ndarray
    total: float
    grad_h: np.ndarray


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, np.asarray(z, dtype=np.float64))


def calibrate_state(h: np.ndarray, spec: LossSpec) -> LossState:
    """Center on the batch mean; for the radius losses also set R^2."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] == 0:
        raise EmptyBatchError("cannot calibrate a loss state on an empty batch")
    center = col_means(h)
    radius_sq = 0.0
    if spec.kind.uses_radius:
        with np.errstate(over="ignore", invalid="ignore"):
            d = row_sq_norms(h - center)
            radius_sq = float(np.quantile(d, 1.0 - spec.nu))
    return LossState(center=center, radius_sq=radius_sq)


def _check_width(h: np.ndarray, state: LossState) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2:
        raise ShapeError(f"expected a 2-D activation matrix, got shape {h.shape}")
    if h.shape[1] != state.center.shape[0]:
        raise ShapeError(
            f"activations have width {h.shape[1]} but the loss state was calibrated on width {state.center.shape[0]}"
        )
    return h


def evaluate(h: np.ndarray, spec: LossSpec, state: LossState) -> LossEval:
    """Per-sample terms, total and ``d total / d h`` with center and radius held fixed.

    Overflow yields inf/nan rather than a warning; trainers check for it.
    """
    h = _check_width(h, state)
    with np.errstate(over="ignore", invalid="ignore"):
        return _evaluate(h, spec, state)


def _evaluate(h: np.ndarray, spec: LossSpec, state: LossState) -> LossEval:
    kind, c = spec.kind, spec.c

    if kind in (LossKind.GOODNESS, LossKind.GOODNESS_ADJUSTED):
        z = row_sq_norms(h) - c
        s = sigmoid(z)
        if kind is LossKind.GOODNESS:
            per_sample = s
            dz = s * (1.0 - s)
        else:
            per_sample = softplus(z)
            dz = s
        return LossEval(per_sample, float(per_sample.sum()), 2.0 * dz[:, None] * h)

    diff = h - state.center
    d = row_sq_norms(diff)
    if kind is LossKind.HB_SVDD:
        return LossEval(d, float(d.sum()), 2.0 * diff)

    r2 = state.radius_sq
    excess = d - r2
    if kind is LossKind.SVDD:
        per_sample = c * np.maximum(excess, 0.0)
        # subgradient 0 at the kink
        dd = np.where(excess > 0, c, 0.0)
    else:
        per_sample = 0.5 * c * excess**2
        dd = c * excess
    total = r2 + float(per_sample.sum())
    return LossEval(per_sample, total, 2.0 * dd[:, None] * diff)


def distance_scores(h: np.ndarray, spec: LossSpec, state: LossState) -> np.ndarray:
    """Per-sample anomaly score; larger means more anomalous."""
    return evaluate(h, spec, state).per_sample


def grad_check(spec: LossSpec, state: LossState, h: np.ndarray, eps: float = 1e-5) -> float:
    """Max relative error between ``grad_h`` and central differences of ``total``.

    Entries whose magnitudes are both below 1e-8 are compared absolutely.
    """
    h = np.array(h, dtype=np.float64)
    analytic = evaluate(h, spec, state).grad_h
    numeric = np.empty_like(h)
    for idx in np.ndindex(h.shape):
        hp = h.copy()
        hp[idx] += eps
        hm = h.copy()
        hm[idx] -= eps
        numeric[idx] = (evaluate(hp, spec, state).total - evaluate(hm, spec, state).total) / (2 * eps)
    return relative_error(analytic, numeric)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    err = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    rel = np.where(scale > floor, err / np.where(scale > floor, scale, 1.0), err)
    return float(rel.max()) if rel.size else 0.0
