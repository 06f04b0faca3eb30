"""Shapley-value attributions with an interventional value function.

The value of a coalition ``S`` for a row ``x`` is the mean model output over
background rows ``b`` with the features in ``S`` taken from ``x`` and the rest
from ``b``.  :func:`shap_exact` enumerates every coalition.
:func:`shap_kernel` solves the Shapley-kernel weighted least squares over a
coalition sample, with the efficiency constraint eliminated analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetError, DataError
from .results import AttributionResult

MAX_EXACT_FEATURES = 15
_ROW_CHUNK = 400_000


def as_predict_fn(model):
    """Return a callable mapping an (n, p) array to n predictions."""
    fn = getattr(model, "predict", None) or model
    return lambda X: np.asarray(fn(np.ascontiguousarray(X)), dtype=float)


def feature_names_of(model, p):
    names = getattr(model, "feature_names", None)
    return tuple(names) if names is not None else tuple(f"x{i}" for i in range(p))


def coalition_values(f, X, background, masks):
    """Mean model output for each (mask, row) pair; shape ``(n_masks, n_rows)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    masks = np.asarray(masks, dtype=bool)
    n_rows, p = X.shape
    nb = bg.shape[0]
    out = np.empty((masks.shape[0], n_rows))
    per_mask = n_rows * nb
    step = max(1, _ROW_CHUNK // max(per_mask, 1))
    for s in range(0, masks.shape[0], step):
        m = masks[s:s + step]                               # (k, p)
        # composite[k, i, b, j] = X[i, j] if m[k, j] else bg[b, j]
        comp = np.where(m[:, None, None, :], X[None, :, None, :], bg[None, None, :, :])
        vals = f(comp.reshape(-1, p)).reshape(m.shape[0], n_rows, nb)
        out[s:s + m.shape[0]] = vals.mean(axis=2)
    return out


@dataclass(frozen=True)
class ShapExplanation:
    values: np.ndarray  # (n_rows, p), model-output units
    base_value: float
    predictions: np.ndarray
    features: tuple
    background: dict = field(default_factory=dict)

    def efficiency_gap(self):
        return np.abs(self.values.sum(axis=1) + self.base_value - self.predictions)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.features) + "\n")
            for row in self.values:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _check_background(background, p):
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    if bg.shape[0] == 0:
        raise DataError("background set is empty")
    if bg.shape[1] != p:
        raise DataError(f"background has {bg.shape[1]} features, expected {p}")
    return bg


def _all_masks(p):
    codes = np.arange(2 ** p, dtype=np.int64)
    return ((codes[:, None] >> np.arange(p)) & 1).astype(bool)


def shap_exact_rows(model, X, background):
    """Exact Shapley values for each row of ``X``; returns ``(phi, base)``."""
    f = as_predict_fn(model)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    p = X.shape[1]
    if p > MAX_EXACT_FEATURES:
        raise BudgetError(f"exact enumeration limited to {MAX_EXACT_FEATURES} features "
                          f"(got {p}); use kernel mode")
    bg = _check_background(background, p)
    masks = _all_masks(p)
    v = coalition_values(f, X, bg, masks)                   # (2^p, n)
    sizes = masks.sum(axis=1)
    # weight for a coalition S not containing j: |S|! (p-|S|-1)! / p!
    w_size = np.array([math.factorial(s) * math.factorial(p - s - 1) / math.factorial(p)
                       for s in range(p)])
    codes = np.arange(2 ** p)
    phi = np.zeros((X.shape[0], p))
    for j in range(p):
        without = codes[(codes >> j) & 1 == 0]
        with_j = without | (1 << j)
        phi[:, j] = w_size[sizes[without]] @ (v[with_j] - v[without])
    base = float(v[0, 0])
    return phi, base


def shap_exact(model, x, background) -> np.ndarray:
    """Exact Shapley values of one feature vector."""
    phi, _ = shap_exact_rows(model, np.atleast_2d(x), background)
    return phi[0]


def _kernel_weight(p, s):
    return (p - 1) / (math.comb(p, s) * s * (p - s))


def kernel_coalitions(p, n_coalitions, seed):
    """Coalition masks and regression weights for Kernel SHAP.

    Size pairs ``(s, p - s)`` are enumerated outright, smallest first, while
    the budget covers them; the rest of the kernel mass is sampled, each
    draw paired with its complement.  Empty and full coalitions are handled
    by the constraint, not listed here.
    """
    if n_coalitions < 2 * p + 2:
        raise BudgetError(f"n_coalitions must be >= 2p+2 = {2 * p + 2}")
    rng = np.random.default_rng(int(seed))
    masks, weights = [], []
    budget = int(n_coalitions)
    sizes = list(range(1, p // 2 + 1))
    remaining = list(sizes)
    for s in sizes:
        paired = s != p - s
        count = math.comb(p, s) * (2 if paired else 1)
        if count > budget:
            break
        for combo in _combinations(p, s):
            m = np.zeros(p, dtype=bool)
            m[list(combo)] = True
            masks.append(m)
            weights.append(_kernel_weight(p, s))
            if paired:
                masks.append(~m)
                weights.append(_kernel_weight(p, p - s))
        budget -= count
        remaining.remove(s)
    if remaining and budget >= 2:
        # total kernel mass of each leftover size pair
        mass = np.array([(p - 1) / (s * (p - s)) * (1 if s == p - s else 2) for s in remaining])
        n_draw = budget // 2
        draws = rng.choice(len(remaining), size=n_draw, p=mass / mass.sum())
        per = mass.sum() / (2 * n_draw)
        for d in draws:
            s = remaining[d]
            m = np.zeros(p, dtype=bool)
            m[rng.choice(p, size=s, replace=False)] = True
            masks.append(m)
            weights.append(per)
            masks.append(~m)
            weights.append(per)
    return np.array(masks, dtype=bool).reshape(-1, p), np.array(weights)


def _combinations(p, s):
    import itertools
    return itertools.combinations(range(p), s)


def shap_kernel_rows(model, X, background, n_coalitions=2048, seed=0):
    """Kernel SHAP for each row of ``X``; returns ``(phi, base, meta)``."""
    f = as_predict_fn(model)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    bg = _check_background(background, p)
    base = float(f(bg).mean())
    fx = f(X)
    delta = fx - base
    if p == 1:
        return delta[:, None].copy(), base, {"coalitions": 0, "enumerated": True}
    masks, w = kernel_coalitions(p, n_coalitions, seed)
    v = coalition_values(f, X, bg, masks) - base            # (k, n)
    Z = masks.astype(float)
    # eliminate the last coefficient: phi_p = delta - sum_{j<p} phi_j
    A = Z[:, :-1] - Z[:, -1:]
    B = v - Z[:, -1:] * delta[None, :]
    AtW = A.T * w
    lhs = AtW @ A
    try:
        cond = np.linalg.cond(lhs)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e12:
        raise BudgetError("singular kernel regression; increase n_coalitions")
    head = np.linalg.solve(lhs, AtW @ B)                    # (p-1, n)
    last = delta - head.sum(axis=0)
    phi = np.vstack([head, last[None, :]]).T
    n_enum = sum(math.comb(p, s) for s in range(1, p))
    meta = {"coalitions": int(masks.shape[0]), "enumerated": bool(masks.shape[0] >= n_enum),
            "seed": int(seed)}
    return phi, base, meta


def shap_kernel(model, x, background, n_coalitions=2048, seed=0) -> np.ndarray:
    phi, _, _ = shap_kernel_rows(model, np.atleast_2d(x), background, n_coalitions, seed)
    return phi[0]


def sample_background(X, n_max=100, seed=0):
    """Seeded uniform subsample of ``min(n_max, n)`` rows, original order kept."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] <= n_max:
        return X.copy(), np.arange(X.shape[0])
    idx = np.sort(np.random.default_rng(int(seed)).choice(X.shape[0], size=n_max, replace=False))
    return X[idx], idx


def shap_summary(model, X, background, mode="auto", budget=2048, seed=0):
    """Mean absolute Shapley value per feature over the rows of ``X``.

    ``mode`` is ``"exact"``, ``"kernel"`` or ``"auto"`` (exact up to 10
    features).  Returns ``(AttributionResult, ShapExplanation)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    p = X.shape[1]
    if mode == "auto":
        mode = "exact" if p <= 10 else "kernel"
    if mode == "exact":
        phi, base = shap_exact_rows(model, X, background)
        meta = {"mode": "exact", "efficiency_tol": 1e-9}
    elif mode == "kernel":
        phi, base, meta = shap_kernel_rows(model, X, background, budget, seed)
        meta = {"mode": "kernel", **meta}
    else:
        raise DataError(f"unknown SHAP mode {mode!r}")
    names = feature_names_of(model, p)
    preds = as_predict_fn(model)(X)
    expl = ShapExplanation(phi, base, preds, names,
                           {"rows": int(np.atleast_2d(background).shape[0])})
    meta.update({"rows": int(X.shape[0]), "background_rows": int(np.atleast_2d(background).shape[0]),
                 "model_kind": getattr(model, "kind", "callable"),
                 "max_efficiency_gap": float(expl.efficiency_gap().max()) if X.shape[0] else 0.0})
    scores = np.abs(phi).mean(axis=0)
    return AttributionResult("shap", names, scores, meta), expl
