"""CART regression trees and random forests with sample weights."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError, DataError
from . import _cart
from .base import TrainedModel, as_matrix, check_xyw, register


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 8
    min_samples_leaf: int = 1
    min_weighted_samples_split: float = 0.0
    feature_subsample: float = 1.0

    def __post_init__(self):
        if int(self.max_depth) < 1:
            raise ConfigError("max_depth must be >= 1")
        if int(self.min_samples_leaf) < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise ConfigError("feature_subsample must lie in (0, 1]")

    def n_features(self, p):
        return max(1, min(p, math.ceil(self.feature_subsample * p - 1e-12)))


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self):
        return self.feature.size

    def predict(self, X):
        return _cart.predict_tree(X, self.feature, self.threshold, self.left, self.right, self.value)

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in
                ("feature", "threshold", "left", "right", "value", "gain")}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["feature"], dtype=np.int64), np.asarray(d["threshold"], dtype=float),
                   np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=float), np.asarray(d["gain"], dtype=float))


def grow(X, y, w, params: TreeParams, *, counts=None, lam=0.0, seed=0, order=None) -> Tree:
    """Grow one tree on rows with ``counts > 0`` (default: every row).

    ``order`` may carry a cached ``_cart.presort(X)``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    counts = np.ones(X.shape[0], dtype=np.int64) if counts is None else np.asarray(counts, dtype=np.int64)
    sw = np.asarray(w, dtype=float) * counts
    if order is None:
        order = _cart.presort(X)
    arrays = _cart.build_tree(X, np.asarray(y, dtype=float), sw, counts, order,
                              int(params.max_depth), int(params.min_samples_leaf),
                              float(params.min_weighted_samples_split),
                              int(params.n_features(X.shape[1])), float(lam), int(seed))
    return Tree(*arrays)


class _Ensemble:
    """Flattened node arrays so a whole ensemble is traversed in one compiled call."""

    def __init__(self, trees):
        self.trees = tuple(trees)
        sizes = [t.n_nodes for t in self.trees]
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        cat = lambda attr: np.concatenate([getattr(t, attr) for t in self.trees])  # noqa: E731
        self.offsets, self.feature, self.thr, self.child = _cart.pack_ensemble(
            offsets, cat("feature").astype(np.int64), cat("threshold"), cat("left"), cat("right"),
            cat("value"))

    def sum(self, X):
        return _cart.predict_ensemble(X, self.offsets, self.feature, self.thr, self.child)


@register("tree")
class TreeModel(TrainedModel):
    def __init__(self, feature_names, config, tree: Tree):
        super().__init__(feature_names, config)
        self.tree = tree

    @property
    def trees(self):
        return (self.tree,)

    def _predict(self, X):
        return self.tree.predict(X)

    def _state(self):
        return {"tree": self.tree.to_dict()}

    @classmethod
    def _from_state(cls, names, config, state):
        return cls(names, config, Tree.from_dict(state["tree"]))


def fit_tree(X, y, w=None, params: TreeParams | None = None, feature_names=None) -> TreeModel:
    """Greedy CART minimising weighted squared error; leaves hold weighted means."""
    params = params or TreeParams()
    X, names = as_matrix(X, feature_names)
    y, w = check_xyw(X, y, w)
    if X.shape[0] == 0:
        raise DataError("cannot fit a tree on zero rows")
    tree = grow(X, y, w, params)
    return TreeModel(names, {"params": asdict(params)}, tree)


FOREST_TREE_DEFAULTS = TreeParams(max_depth=16, min_samples_leaf=2, feature_subsample=1 / 3)


@register("forest")
class ForestModel(TrainedModel):
    def __init__(self, feature_names, config, trees):
        super().__init__(feature_names, config)
        self.trees = tuple(trees)
        self._flat = _Ensemble(self.trees)

    def _predict(self, X):
        return self._flat.sum(X) / len(self.trees)

    def _state(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def _from_state(cls, names, config, state):
        return cls(names, config, [Tree.from_dict(t) for t in state["trees"]])


def fit_random_forest(X, y, w=None, n_trees: int = 100, params: TreeParams | None = None,
                      seed: int = 0, bootstrap: bool = True, feature_names=None) -> ForestModel:
    """Bagged CART ensemble.

    Each tree sees a bootstrap of ``n`` rows drawn with probability
    proportional to ``w`` and also uses ``w`` in its split criterion.  Tree
    ``t`` draws from its own stream seeded by ``(seed, t)``, so results do
    not depend on evaluation order.
    """
    params = params or FOREST_TREE_DEFAULTS
    if int(n_trees) < 1:
        raise ConfigError("n_trees must be >= 1")
    X, names = as_matrix(X, feature_names)
    y, w = check_xyw(X, y, w)
    n = X.shape[0]
    if n == 0:
        raise DataError("cannot fit a forest on zero rows")
    X = np.ascontiguousarray(X)
    prob = w / w.sum()
    order = _cart.presort(X)
    trees = []
    for t in range(int(n_trees)):
        rng = np.random.default_rng([int(seed), t])
        if bootstrap:
            counts = np.bincount(rng.choice(n, size=n, replace=True, p=prob), minlength=n)
        else:
            counts = np.ones(n, dtype=np.int64)
        trees.append(grow(X, y, w, params, counts=counts, seed=int(rng.integers(2**31 - 1)),
                          order=order))
    config = {"n_trees": int(n_trees), "params": asdict(params), "seed": int(seed),
              "bootstrap": bool(bootstrap)}
    return ForestModel(names, config, trees)
