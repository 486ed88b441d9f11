"""Penalized logistic regression via proximal gradient descent.

The loss is the mean negative Bernoulli log-likelihood (mean, not sum, so a
penalty weight is comparable across training windows of different length;
for a sum-scale weight use lambda_sum = n * lambda_mean). The L1 penalty is
handled by a soft-thresholding step on the coefficients; the intercept is
never penalized. Step sizes come from a backtracking line search on the
smooth part, and iteration stops once the objective decrease falls below
``tol`` and the parameter update stabilizes below ``step_tol`` (both are
required: the objective flattens well before the coefficients settle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError

PROB_CLAMP = 1e-12
MAX_ITER_DEFAULT = 10_000


@dataclass(frozen=True)
class LogitModel:
    """Fitted logistic model: intercept, coefficients, penalty, diagnostics."""

    intercept: float
    coef: np.ndarray
    penalty: str  # "l1" | "l2" | "none"
    lam: float
    iterations: int
    objective: float
    fallback: bool = False  # single-class target: Laplace base-rate model

    def to_dict(self) -> dict:
        return {
            "kind": "logit",
            "penalty": self.penalty,
            "lambda": self.lam,
            "intercept": self.intercept,
            "coef": self.coef.tolist(),
            "iterations": self.iterations,
            "objective": self.objective,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogitModel":
        return cls(
            intercept=float(d["intercept"]),
            coef=np.asarray(d["coef"], dtype=float),
            penalty=d["penalty"],
            lam=float(d["lambda"]),
            iterations=int(d["iterations"]),
            objective=float(d["objective"]),
            fallback=bool(d.get("fallback", False)),
        )


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mean_nll(z: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood at linear predictor z: softplus(z) - y*z."""
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def laplace_base_rate(y: np.ndarray, n_features: int, penalty: str, lam: float) -> LogitModel:
    """Base-rate model for single-class targets: p = (k+1)/(n+2)."""
    n = y.shape[0]
    p = (float(np.sum(y)) + 1.0) / (n + 2.0)
    b0 = math.log(p / (1.0 - p))
    return LogitModel(
        intercept=b0, coef=np.zeros(n_features), penalty=penalty, lam=lam,
        iterations=0, objective=mean_nll(np.full(n, b0), y), fallback=True,
    )


def _fit_penalized(
    X: np.ndarray,
    y: np.ndarray,
    l1: float,
    l2: float,
    penalty: str,
    tol: float,
    step_tol: float,
    max_iter: int,
    init: tuple[float, np.ndarray] | None = None,
) -> LogitModel:
    """Accelerated proximal gradient (FISTA with function-value restarts).

    Parameters are (intercept, coef) stacked as w = [b0, beta]; the proximal
    step soft-thresholds beta only. Momentum restarts whenever the
    accelerated candidate would raise the objective, so the objective
    decreases monotonically and the stopping rule (objective decrease below
    ``tol`` and parameter update below ``step_tol``) is sound. Fragility
    features are nearly collinear, which makes the unaccelerated iteration
    impractically slow on long windows.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if y.shape[0] != n:
        raise DataError(f"X has {n} rows but y has {y.shape[0]}")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise DataError("targets must be binary 0/1")
    if classes.shape[0] < 2:
        return laplace_base_rate(y, p, penalty, l1 if penalty == "l1" else l2)

    aug = np.column_stack([np.ones(n), X])
    if init is None:
        w = np.zeros(p + 1)
    else:
        w = np.concatenate([[float(init[0])], np.asarray(init[1], dtype=float)])

    def smooth(w_):
        val = mean_nll(aug @ w_, y)
        if l2 > 0.0:
            val += l2 * float(w_[1:] @ w_[1:])
        return val

    def smooth_grad(w_):
        resid = sigmoid(aug @ w_) - y
        g = aug.T @ resid / n
        if l2 > 0.0:
            g[1:] += 2.0 * l2 * w_[1:]
        return g

    def nonsmooth(w_):
        return l1 * float(np.sum(np.abs(w_[1:]))) if l1 > 0.0 else 0.0

    def prox(v, t):
        out = v.copy()
        if l1 > 0.0:
            out[1:] = _soft_threshold(v[1:], t * l1)
        return out

    # Inverse Lipschitz bound on the smooth gradient (logistic curvature
    # <= 1/4); backtracking only ever shrinks the step.
    lips = float(np.linalg.eigvalsh(aug.T @ aug).max()) / (4.0 * n) + 2.0 * l2
    step = 1.0 / max(lips, 1e-12)

    f_w = smooth(w) + nonsmooth(w)
    z = w.copy()
    t_mom = 1.0
    iters = 0
    for iters in range(1, max_iter + 1):
        def prox_step(point):
            nonlocal step
            f_point = smooth(point)
            g = smooth_grad(point)
            while True:
                cand = prox(point - step * g, step)
                d = cand - point
                quad = f_point + float(g @ d) + float(d @ d) / (2.0 * step)
                f_cand_smooth = smooth(cand)
                if f_cand_smooth <= quad + 1e-15:
                    return cand, f_cand_smooth + nonsmooth(cand)
                step *= 0.5
                if step < 1e-20:
                    raise DataError("line search failed: step size underflow")

        w_new, f_new = prox_step(z)
        if f_new > f_w:
            # momentum overshoot: restart from the last accepted point
            z = w
            t_mom = 1.0
            w_new, f_new = prox_step(z)

        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        z = w_new + ((t_mom - 1.0) / t_next) * (w_new - w)
        delta_obj = f_w - f_new
        max_update = float(np.max(np.abs(w_new - w)))
        w, f_w, t_mom = w_new, f_new, t_next
        if delta_obj < tol and max_update < step_tol:
            break

    return LogitModel(
        intercept=float(w[0]), coef=w[1:], penalty=penalty,
        lam=l1 if penalty == "l1" else l2,
        iterations=iters, objective=f_w,
    )


def fit_logit_l1(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-8,
    step_tol: float = 1e-10,
    max_iter: int = MAX_ITER_DEFAULT,
    init: tuple[float, np.ndarray] | None = None,
) -> LogitModel:
    """Lasso-logit: mean NLL + lam * ||coef||_1, intercept unpenalized."""
    if lam < 0:
        raise DataError(f"penalty weight must be >= 0, got {lam}")
    return _fit_penalized(X, y, l1=lam, l2=0.0, penalty="l1",
                          tol=tol, step_tol=step_tol, max_iter=max_iter, init=init)


def fit_logit_l2(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-8,
    step_tol: float = 1e-10,
    max_iter: int = MAX_ITER_DEFAULT,
    init: tuple[float, np.ndarray] | None = None,
) -> LogitModel:
    """Ridge-logit: mean NLL + lam * ||coef||_2^2, intercept unpenalized."""
    if lam < 0:
        raise DataError(f"penalty weight must be >= 0, got {lam}")
    return _fit_penalized(X, y, l1=0.0, l2=lam, penalty="l2",
                          tol=tol, step_tol=step_tol, max_iter=max_iter, init=init)


def linear_score(model: LogitModel, x: np.ndarray) -> float:
    """Linear predictor for one feature row."""
    x = np.asarray(x, dtype=float)
    if x.shape != model.coef.shape:
        raise DataError(f"row has {x.shape} features, model expects {model.coef.shape}")
    return float(model.intercept + x @ model.coef)


def predict_proba(model: LogitModel, x: np.ndarray) -> float:
    """Stress probability for one row, clamped away from {0,1} for scoring."""
    p = float(sigmoid(np.array([linear_score(model, x)]))[0])
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def l1_objective(model: LogitModel, X: np.ndarray, y: np.ndarray) -> float:
    """Mean-loss lasso objective at the model's parameters."""
    z = model.intercept + np.asarray(X, dtype=float) @ model.coef
    return mean_nll(z, np.asarray(y, dtype=float)) + model.lam * float(np.sum(np.abs(model.coef)))
