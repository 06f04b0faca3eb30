"""Gradient-boosted regression trees (squared error, L2-shrunk leaves)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, DataError
from . import _cart
from .base import TrainedModel, as_matrix, check_xyw, register
from .trees import Tree, TreeParams, _Ensemble, grow


@dataclass(frozen=True)
class GbtParams:
    n_rounds: int = 200
    learning_rate: float = 0.1
    tree: TreeParams = field(default_factory=lambda: TreeParams(max_depth=4))
    l2_leaf_regularization: float = 1.0
    loss: str = "squared-error"
    seed: int = 0

    def __post_init__(self):
        if int(self.n_rounds) < 1:
            raise ConfigError("n_rounds must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.l2_leaf_regularization < 0:
            raise ConfigError("l2_leaf_regularization must be >= 0")
        if self.loss != "squared-error":
            raise ConfigError(f"unsupported loss {self.loss!r}")
        if isinstance(self.tree, dict):
            object.__setattr__(self, "tree", TreeParams(**self.tree))


@register("gbt")
class GbtModel(TrainedModel):
    def __init__(self, feature_names, config, base_score, learning_rate, trees, train_loss=()):
        super().__init__(feature_names, config)
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.trees = tuple(trees)
        self.train_loss = tuple(float(v) for v in train_loss)
        self._flat = _Ensemble(self.trees)

    def _predict(self, X):
        return self.base_score + self.learning_rate * self._flat.sum(X)

    def staged_predict(self, X):
        """Yield predictions after each boosting round."""
        X = np.ascontiguousarray(np.asarray(X, dtype=float))
        pred = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            pred = pred + self.learning_rate * t.predict(X)
            yield pred

    def _state(self):
        return {"base_score": self.base_score, "learning_rate": self.learning_rate,
                "trees": [t.to_dict() for t in self.trees], "train_loss": list(self.train_loss)}

    @classmethod
    def _from_state(cls, names, config, state):
        return cls(names, config, state["base_score"], state["learning_rate"],
                   [Tree.from_dict(t) for t in state["trees"]], state.get("train_loss", ()))


def fit_gbt(X, y, w=None, params: GbtParams | None = None, feature_names=None) -> GbtModel:
    """First-order boosting for squared error.

    Starts from the weighted mean of ``y``; each round fits a tree to the
    residuals with leaf values ``sum(w*r) / (sum(w) + l2)`` and adds
    ``learning_rate`` times it.  The weighted training MSE after every round
    is kept in ``train_loss``.
    """
    params = params or GbtParams()
    X, names = as_matrix(X, feature_names)
    y, w = check_xyw(X, y, w)
    if X.shape[0] == 0:
        raise DataError("cannot fit boosting on zero rows")
    X = np.ascontiguousarray(X)
    sw = w.sum()
    base = float(w @ y / sw)
    pred = np.full(y.size, base)
    lr = float(params.learning_rate)
    lam = float(params.l2_leaf_regularization)
    rng = np.random.default_rng(int(params.seed))
    order = _cart.presort(X)
    trees, losses = [], []
    for _ in range(int(params.n_rounds)):
        resid = y - pred
        tree = grow(X, resid, w, params.tree, lam=lam, seed=int(rng.integers(2**31 - 1)),
                    order=order)
        pred = pred + lr * tree.predict(X)
        trees.append(tree)
        losses.append(float(w @ (y - pred) ** 2 / sw))
    config = asdict(params)
    return GbtModel(names, config, base, lr, trees, losses)
