"""Recursive feature elimination driven by tree-ensemble impurity importance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset, SplitPlan
from ..errors import ConfigError, SalixError
from ..metrics import evaluate
from ..models import LearnerSpec, impurity_importance
from .results import AttributionResult

DEFAULT_RFE_LEARNER = LearnerSpec("forest", {})
_TREE_KINDS = ("tree", "forest", "gbt")


@dataclass
class RfeTrace:
    """One entry per step: the subset fitted, its validation R² and importances.

    ``eliminated`` lists features first-removed first.  ``final_importance``
    holds the importances of the last fitted subset.
    """

    features: tuple
    subsets: list = field(default_factory=list)
    r2: list = field(default_factory=list)
    eliminated: list = field(default_factory=list)
    final_importance: dict = field(default_factory=dict)
    seed: int = 0
    learner: dict = field(default_factory=dict)

    @property
    def best_step(self) -> int:
        # max R², ties resolved to the smaller subset (later step)
        best = 0
        for i, r in enumerate(self.r2):
            if r >= self.r2[best]:
                best = i
        return best

    @property
    def selected(self) -> tuple:
        return tuple(self.subsets[self.best_step]) if self.subsets else ()

    def order(self) -> list:
        """All features, least important first: eliminations then survivors."""
        survivors = self.subsets[-1] if self.subsets else []
        tail = sorted(survivors, key=lambda f: (self.final_importance.get(f, 0.0),
                                                -self.features.index(f)))
        return list(self.eliminated) + [f for f in tail if f not in self.eliminated]

    def to_result(self) -> AttributionResult:
        """Score = position in :meth:`order` (1 for the first removed)."""
        pos = {f: i + 1 for i, f in enumerate(self.order())}
        scores = [float(pos[f]) for f in self.features]
        meta = {"selected": list(self.selected), "best_r2": self.r2[self.best_step],
                "seed": self.seed, "model_kind": self.learner.get("kind"),
                "score": "elimination order (later removed = larger)"}
        return AttributionResult("rfe", self.features, scores, meta)

    def to_dict(self):
        return {"features": list(self.features), "subsets": [list(s) for s in self.subsets],
                "r2": list(self.r2), "eliminated": list(self.eliminated),
                "selected": list(self.selected), "final_importance": dict(self.final_importance),
                "seed": self.seed, "learner": self.learner}


def rfe(ds: Dataset, learner: LearnerSpec = DEFAULT_RFE_LEARNER, split: SplitPlan | None = None,
        min_features: int = 1, seed: int = 0, features=None) -> RfeTrace:
    """Drop the least important feature one at a time, scoring each subset.

    Each step fits ``learner`` on the training rows of ``split`` and scores
    R² on its validation rows.  The removed feature is the one with the
    lowest impurity importance, the later one in schema order on ties.
    A fit error re-raises with the trace so far as ``exc.partial_trace``.
    """
    if learner.kind not in _TREE_KINDS:
        raise ConfigError(f"rfe needs a tree learner, got {learner.kind!r}")
    features = list(features) if features is not None else list(ds.feature_names)
    if not features:
        raise ConfigError("rfe needs at least one feature")
    if not 1 <= int(min_features) <= len(features):
        raise ConfigError(f"min_features must lie in [1, {len(features)}]")
    if split is None:
        raise ConfigError("rfe needs a train/validation split")
    learner = learner.with_seed(seed)
    y, w = ds.y(), np.asarray(ds.weights)
    tr, va = split.train, split.valid
    trace = RfeTrace(tuple(features), seed=int(seed), learner=learner.to_dict())
    current = list(features)
    while True:
        try:
            X = ds.X(current)
            model = learner.fit(X[tr], y[tr], w[tr], current)
            r2 = evaluate(y[va], model.predict(X[va])).r2
        except SalixError as exc:
            exc.partial_trace = trace
            raise
        imp = impurity_importance(model)
        trace.subsets.append(tuple(current))
        trace.r2.append(float(r2) if r2 is not None else float("-inf"))
        trace.final_importance = imp
        if len(current) <= int(min_features):
            break
        low = min(imp[f] for f in current)
        drop = [f for f in current if imp[f] == low][-1]
        trace.eliminated.append(drop)
        current.remove(drop)
    return trace
