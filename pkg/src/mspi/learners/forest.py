"""Random forest of Gini classification trees on bootstrap resamples.

Each tree grows on its own bootstrap resample, considering ceil(sqrt(p))
uniformly drawn candidate features per node; leaves store the stress
frequency of their training rows. The forest score is the average leaf
frequency across trees, in [0, 1]. Per-tree random streams are spawned
from the fit seed, so output is bit-deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .trees import Tree, build_tree, tree_predict


@dataclass(frozen=True)
class RandomForestParams:
    n_trees: int = 500
    max_depth: int = 8
    min_leaf: int = 5
    bootstrap: bool = True  # test hook; real fits always resample
    n_candidate_features: int | None = None  # None -> ceil(sqrt(p))

    def resolve_mtry(self, p: int) -> int:
        if self.n_candidate_features is not None:
            return min(self.n_candidate_features, p)
        return min(math.ceil(math.sqrt(p)), p)


@dataclass
class ForestModel:
    trees: list[Tree]
    params: RandomForestParams
    seed: int

    def to_dict(self) -> dict:
        return {
            "kind": "random_forest",
            "seed": self.seed,
            "n_trees": self.params.n_trees,
            "max_depth": self.params.max_depth,
            "min_leaf": self.params.min_leaf,
            "trees": [t.to_dict() for t in self.trees],
        }


def fit_random_forest(
    X: np.ndarray, y: np.ndarray, params: RandomForestParams, seed: int | np.random.SeedSequence
) -> ForestModel:
    """Fit the ensemble; requires both classes present."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if np.unique(y).shape[0] < 2:
        raise DataError("random forest needs both classes in the training targets")
    mtry = params.resolve_mtry(p)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    trees = []
    for child in root.spawn(params.n_trees):
        rng = np.random.Generator(np.random.PCG64(child))
        idx = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        trees.append(
            build_tree(
                X[idx], y[idx], rng,
                max_depth=params.max_depth, min_leaf=params.min_leaf,
                n_candidate_features=mtry, criterion="gini",
            )
        )
    seed_repr = seed.entropy if isinstance(seed, np.random.SeedSequence) else seed
    return ForestModel(trees=trees, params=params, seed=_scalar_seed(seed_repr))


def _scalar_seed(entropy) -> int:
    if isinstance(entropy, (list, tuple)):
        return int(entropy[0]) if entropy else 0
    return int(entropy)


def rf_score_many(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Ensemble-average leaf frequency for each row of X."""
    X = np.asarray(X, dtype=float)
    acc = np.zeros(X.shape[0])
    for tree in model.trees:
        acc += tree_predict(tree, X)
    return acc / len(model.trees)


def rf_score(model: ForestModel, x: np.ndarray) -> float:
    """Raw forest score for one row, in [0, 1]."""
    return float(rf_score_many(model, np.asarray(x, dtype=float)[None, :])[0])
