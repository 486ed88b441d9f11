"""Gradient-boosted shallow regression trees for the Bernoulli loss.

The score F is additive in log-odds space: F_0 is the logit of the training
event rate, each stage fits a depth-limited regression tree to the negative
gradient (y - p), re-estimates the terminal values with the one-step Newton
update sum(y - p) / sum(p(1-p)), and adds the tree with shrinkage nu. The
raw score for a row is F_M(x); probabilities come from a separately fitted
calibration map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericError
from .logit import mean_nll, sigmoid
from .trees import Tree, build_tree, tree_leaf_index, tree_predict


@dataclass(frozen=True)
class GradientBoostingParams:
    n_stages: int = 100
    max_depth: int = 2
    shrinkage: float = 0.1
    min_leaf: int = 5

    def __post_init__(self):
        if not 0.0 <= self.shrinkage <= 1.0:
            raise DataError(f"shrinkage must be in [0,1], got {self.shrinkage}")


@dataclass
class BoostModel:
    f0: float
    trees: list[Tree]
    params: GradientBoostingParams
    train_loss: list[float]

    def to_dict(self) -> dict:
        return {
            "kind": "gradient_boosting",
            "f0": self.f0,
            "n_stages": self.params.n_stages,
            "max_depth": self.params.max_depth,
            "shrinkage": self.params.shrinkage,
            "trees": [t.to_dict() for t in self.trees],
        }


def fit_gradient_boosting(X: np.ndarray, y: np.ndarray, params: GradientBoostingParams) -> BoostModel:
    """Fit the boosted ensemble; requires both classes present."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(y).shape[0] < 2:
        raise DataError("gradient boosting needs both classes in the training targets")

    rate = float(np.mean(y))
    f0 = math.log(rate / (1.0 - rate))
    f = np.full(y.shape[0], f0)
    trees: list[Tree] = []
    losses = [mean_nll(f, y)]
    for stage in range(params.n_stages):
        p = sigmoid(f)
        resid = y - p
        tree = build_tree(
            X, resid, rng=None, max_depth=params.max_depth, min_leaf=params.min_leaf,
            n_candidate_features=None, criterion="sse",
        )
        # one-step Newton terminal values on the Bernoulli loss
        leaf = tree_leaf_index(tree, X)
        weight = p * (1.0 - p)
        for node in np.unique(leaf):
            members = leaf == node
            denom = float(np.sum(weight[members]))
            tree.value[node] = float(np.sum(resid[members])) / max(denom, 1e-12)
        f = f + params.shrinkage * tree.value[leaf]
        loss = mean_nll(f, y)
        if not math.isfinite(loss):
            raise NumericError(f"gradient boosting loss became non-finite at stage {stage}")
        trees.append(tree)
        losses.append(loss)
    return BoostModel(f0=f0, trees=trees, params=params, train_loss=losses)


def gb_score_many(model: BoostModel, X: np.ndarray) -> np.ndarray:
    """Raw boosted log-odds score for each row of X."""
    X = np.asarray(X, dtype=float)
    f = np.full(X.shape[0], model.f0)
    for tree in model.trees:
        f += model.params.shrinkage * tree_predict(tree, X)
    return f


def gb_score(model: BoostModel, x: np.ndarray) -> float:
    return float(gb_score_many(model, np.asarray(x, dtype=float)[None, :])[0])
