"""From-scratch weighted regressors behind one fit/predict contract."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, SalixError, UnsupportedModelError
from .base import TrainedModel, from_dict, load_model, predict
from .boosting import GbtModel, GbtParams, fit_gbt
from .linear import LinearModel, fit_linear
from .mlp import MlpModel, MlpParams, fit_mlp
from .trees import FOREST_TREE_DEFAULTS, ForestModel, TreeModel, TreeParams, fit_random_forest, fit_tree

KINDS = ("linear", "tree", "forest", "gbt", "mlp")

__all__ = [
    "KINDS", "LearnerSpec", "TrainedModel", "TreeParams", "GbtParams", "MlpParams",
    "LinearModel", "TreeModel", "ForestModel", "GbtModel", "MlpModel",
    "fit_linear", "fit_tree", "fit_random_forest", "fit_gbt", "fit_mlp",
    "predict", "impurity_importance", "grid_search", "GridResult",
    "from_dict", "load_model",
]


def _tree_params(d, default):
    if d is None:
        return default
    if isinstance(d, TreeParams):
        return d
    merged = {**default.__dict__, **d}
    return TreeParams(**merged)


@dataclass(frozen=True)
class LearnerSpec:
    """A model kind plus keyword parameters, fit through :meth:`fit`.

    ``params`` keys per kind:

    * linear: none
    * tree: ``tree`` (TreeParams fields)
    * forest: ``n_trees``, ``tree``, ``seed``, ``bootstrap``
    * gbt: GbtParams fields (``tree`` as a dict)
    * mlp: MlpParams fields
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")

    def with_seed(self, seed):
        if self.kind == "linear" or self.kind == "tree":
            return self
        return LearnerSpec(self.kind, {**self.params, "seed": int(seed)})

    def fit(self, X, y, w=None, feature_names=None) -> TrainedModel:
        p = dict(self.params)
        try:
            if self.kind == "linear":
                if p:
                    raise ConfigError(f"linear learner takes no parameters, got {sorted(p)}")
                return fit_linear(X, y, w, feature_names)
            if self.kind == "tree":
                return fit_tree(X, y, w, _tree_params(p.pop("tree", None), TreeParams()), feature_names)
            if self.kind == "forest":
                tree = _tree_params(p.pop("tree", None), FOREST_TREE_DEFAULTS)
                return fit_random_forest(X, y, w, params=tree, feature_names=feature_names, **p)
            if self.kind == "gbt":
                tree = _tree_params(p.pop("tree", None), GbtParams().tree)
                return fit_gbt(X, y, w, GbtParams(tree=tree, **p), feature_names)
            return fit_mlp(X, y, w, MlpParams(**p), feature_names)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {self.kind}: {exc}") from exc

    def to_dict(self):
        return {"kind": self.kind, "params": self.params}


def impurity_importance(model: TrainedModel) -> dict[str, float]:
    """Total weighted squared-error reduction per feature, normalised to sum 1."""
    if not isinstance(model, (TreeModel, ForestModel, GbtModel)):
        raise UnsupportedModelError(f"impurity importance needs a tree model, got {model.kind}")
    score = np.zeros(len(model.feature_names))
    for t in model.trees:
        split = t.feature >= 0
        np.add.at(score, t.feature[split], t.gain[split])
    total = score.sum()
    if total > 0:
        score = score / total
    return dict(zip(model.feature_names, score.tolist()))


@dataclass
class GridResult:
    best: TrainedModel | None
    best_params: dict | None
    table: list  # one dict per grid cell, grid order


def _r2(y, yhat):
    from ..metrics import evaluate
    return evaluate(y, yhat).r2


def grid_search(learner: LearnerSpec, grid: dict, X, y, w, split, feature_names=None) -> GridResult:
    """Fit every cell of the cartesian ``grid`` on training rows and score validation R².

    Cell errors are recorded in the table rather than raised.  The best cell
    is the first one (grid order) with the highest score.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("grid must be non-empty")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    tr, va = split.train, split.valid
    keys = list(grid)
    best, best_params, best_score = None, None, -np.inf
    table = []
    for values in itertools.product(*(grid[k] for k in keys)):
        cell = dict(zip(keys, values))
        row = {"params": cell}
        try:
            model = LearnerSpec(learner.kind, {**learner.params, **cell}).fit(
                X[tr], y[tr], w[tr], feature_names)
            score = _r2(y[va], model.predict(X[va]))
            row["r2"] = score
            if score is not None and score > best_score:
                best, best_params, best_score = model, cell, score
        except SalixError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        table.append(row)
    return GridResult(best, best_params, table)
