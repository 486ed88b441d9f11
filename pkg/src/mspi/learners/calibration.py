"""Platt scaling: a logistic map from raw scores to probabilities.

The map p = sigmoid(a*s + b) is fitted by maximum likelihood on a held-out
calibration segment (with a tiny ridge term so separable segments stay
finite). Degenerate segments fall back gracefully: a single-class segment
yields an identity-on-probability map and a constant-score segment yields
the Laplace-smoothed event rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logit import PROB_CLAMP, fit_logit_l2, sigmoid

_RIDGE = 1e-8


@dataclass(frozen=True)
class CalibrationMap:
    """Logistic score-to-probability map; ``identity`` passes scores through."""

    a: float
    b: float
    identity: bool = False
    warning: str | None = None

    def to_dict(self) -> dict:
        return {"kind": "platt", "a": self.a, "b": self.b,
                "identity": self.identity, "warning": self.warning}


def fit_platt(scores: np.ndarray, y: np.ndarray) -> CalibrationMap:
    """Maximum-likelihood calibration map on a segment of (score, outcome) pairs."""
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(y, dtype=float)
    classes = np.unique(y)
    if classes.shape[0] < 2:
        return CalibrationMap(a=1.0, b=0.0, identity=True,
                              warning="single-class calibration segment")
    if float(np.max(scores) - np.min(scores)) == 0.0:
        n = y.shape[0]
        rate = (float(np.sum(y)) + 1.0) / (n + 2.0)
        return CalibrationMap(a=0.0, b=math.log(rate / (1.0 - rate)))
    model = fit_logit_l2(scores[:, None], y, lam=_RIDGE, step_tol=1e-12)
    return CalibrationMap(a=float(model.coef[0]), b=model.intercept)


def calibrate(cmap: CalibrationMap, score: float) -> float:
    """Calibrated probability for one raw score."""
    if cmap.identity:
        p = score
    else:
        p = float(sigmoid(np.array([cmap.a * score + cmap.b]))[0])
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def calibrate_many(cmap: CalibrationMap, scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if cmap.identity:
        p = scores
    else:
        p = sigmoid(cmap.a * scores + cmap.b)
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
