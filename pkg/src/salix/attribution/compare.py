"""Cross-method agreement of feature rankings via Spearman's rho."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FeatureMismatchError
from ..metrics import spearman
from .results import AttributionResult


@dataclass(frozen=True)
class RankComparison:
    methods: tuple
    features: tuple
    rho: np.ndarray  # symmetric, NaN where undefined
    label: str | None = None

    def value(self, a, b):
        v = self.rho[self.methods.index(a), self.methods.index(b)]
        return None if np.isnan(v) else float(v)

    def to_dict(self):
        return {"label": self.label, "methods": list(self.methods), "features": list(self.features),
                "rho": [[None if np.isnan(v) else float(v) for v in row] for row in self.rho]}

    def to_markdown(self, digits=2):
        head = "| " + (self.label or "") + " | " + " | ".join(self.methods) + " |"
        lines = [head, "|---|" + "---:|" * len(self.methods)]
        for i, m in enumerate(self.methods):
            cells = ["n/a" if np.isnan(v) else f"{v:.{digits}f}" for v in self.rho[i]]
            lines.append(f"| {m} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def align(results):
    """Check every result covers the same features; return the common order."""
    base = results[0].features
    want = set(base)
    for r in results[1:]:
        have = set(r.features)
        if have != want:
            missing = sorted(want - have)
            extra = sorted(have - want)
            raise FeatureMismatchError(
                f"{r.method} does not match {results[0].method}: missing {missing}, extra {extra}",
                missing + extra)
    return base


def rank_compare(results, label=None) -> RankComparison:
    """Pairwise Spearman rho between the score vectors of ``results``.

    RFE results should already carry elimination-order scores (see
    :meth:`RfeTrace.to_result`).
    """
    results = list(results)
    if not results:
        raise ValueError("nothing to compare")
    feats = align(results)
    vecs = []
    for r in results:
        d = r.as_dict()
        vecs.append(np.array([d[f] for f in feats]))
    k = len(results)
    rho = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            v = spearman(vecs[i], vecs[j])
            if i == j and v is None and len(feats) > 0:
                v = 1.0  # constant vector agrees with itself
            rho[i, j] = rho[j, i] = np.nan if v is None else v
    return RankComparison(tuple(r.method for r in results), tuple(feats), rho, label)


def comparison_table(comparisons, digits=2) -> str:
    """Stack several per-model matrices into one Markdown table.

    Rows are ``model`` x ``method``; columns are methods, so each model
    contributes one block.
    """
    comparisons = list(comparisons)
    if not comparisons:
        return ""
    methods = comparisons[0].methods
    lines = ["| model | method | " + " | ".join(methods) + " |",
             "|---|---|" + "---:|" * len(methods)]
    for c in comparisons:
        for i, m in enumerate(c.methods):
            cells = ["n/a" if np.isnan(v) else f"{v:.{digits}f}" for v in c.rho[i]]
            lines.append(f"| {c.label or ''} | {m} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def load_results(paths) -> list[AttributionResult]:
    return [AttributionResult.from_csv(p) for p in paths]
