"""Regression metrics and Spearman rank correlation.

Undefined results (zero target variance for R², a fully tied vector for
Spearman) come back as ``None``, never as NaN.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class EvalReport:
    mae: float
    rmse: float
    r2: float | None
    n: int
    weighted: bool

    def to_dict(self):
        return asdict(self)


def evaluate(y, yhat, w=None) -> EvalReport:
    """Weighted MAE, RMSE and R² (unweighted when ``w`` is None)."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.size != yhat.size or y.size < 1:
        raise DataError(f"evaluate needs equal non-empty vectors, got {y.size} and {yhat.size}")
    weighted = w is not None
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float).ravel()
    if w.size != y.size:
        raise DataError("weights length mismatch")
    sw = w.sum()
    e = y - yhat
    mae = float(w @ np.abs(e) / sw)
    sse = float(w @ (e * e))
    rmse = float(np.sqrt(sse / sw))
    ybar = w @ y / sw
    sst = float(w @ (y - ybar) ** 2)
    r2 = None if sst <= 1e-300 else 1.0 - sse / sst
    return EvalReport(mae, rmse, r2, int(y.size), weighted)


def average_ranks(a) -> np.ndarray:
    """Ascending ranks starting at 1; ties share the mean of their positions."""
    a = np.asarray(a, dtype=float)
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    ranks = np.empty(a.size)
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(a, b) -> float | None:
    """Pearson correlation of average ranks."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size or a.size < 2:
        raise DataError(f"spearman needs equal vectors of length >= 2, got {a.size} and {b.size}")
    ra = average_ranks(a) - (a.size + 1) / 2.0
    rb = average_ranks(b) - (b.size + 1) / 2.0
    den = np.sqrt((ra @ ra) * (rb @ rb))
    if den == 0:
        return None
    return float(np.clip((ra @ rb) / den, -1.0, 1.0))
