"""Variance-based global sensitivity analysis (Sobol indices).

Design: two ``n x p`` matrices ``A`` and ``B`` taken from one ``2p``-dimensional
Sobol sequence, plus ``AB_i`` = ``A`` with column ``i`` from ``B``; that is
``n (p + 2)`` model evaluations in total.

Estimators, with ``V`` the variance of ``f`` over the rows of ``A`` and ``B``::

    S1_i = mean( f(B) * (f(AB_i) - f(A)) ) / V            (Saltelli 2010)
    ST_i = mean( (f(A) - f(AB_i))**2 ) / (2 V)            (Jansen)

Confidence intervals are percentile bootstraps over the ``n`` base rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from ..dataset import Dataset
from ..errors import DataError
from .results import AttributionResult
from .shap import as_predict_fn, feature_names_of

CONSTANT_VARIANCE = 1e-12


@dataclass(frozen=True)
class SobolDesign:
    A: np.ndarray
    B: np.ndarray
    AB: np.ndarray  # (p, n, p)
    bounds: np.ndarray  # (p, 2)
    seed: int | None = None

    @property
    def n_base(self):
        return self.A.shape[0]

    @property
    def n_features(self):
        return self.A.shape[1]

    @property
    def n_rows(self):
        return self.n_base * (self.n_features + 2)

    def stacked(self):
        """All evaluation rows: A, B, then every AB_i."""
        return np.vstack([self.A, self.B, self.AB.reshape(-1, self.n_features)])


def sobol_points(n, d, seed=None):
    """``n`` points of the ``d``-dimensional Sobol sequence, starting at 0.5.

    The unscrambled sequence's leading all-zero point is skipped.  With a
    ``seed`` the sequence is digitally scrambled instead (nothing skipped).
    """
    if seed is None:
        eng = qmc.Sobol(d, scramble=False)
        eng.fast_forward(1)
    else:
        eng = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(int(seed)))
    return eng.random(n)


def sobol_design(bounds, n_base: int, seed=None, sampler="uniform", marginals=None) -> SobolDesign:
    """Build the ``A``, ``B``, ``AB_i`` matrices.

    ``bounds`` holds ``[lo, hi]`` for each feature and ``n_base`` must be a
    power of two.  ``sampler="empirical"`` maps the unit points through the
    empirical quantiles of ``marginals`` (an ``(m, p)`` array) in place of
    uniform scaling.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise DataError("bounds must have shape (p, 2)")
    if np.any(~(bounds[:, 0] < bounds[:, 1])):
        bad = np.flatnonzero(~(bounds[:, 0] < bounds[:, 1])).tolist()
        raise DataError(f"degenerate bounds for features {bad}")
    n_base = int(n_base)
    if n_base < 2 or n_base & (n_base - 1):
        raise DataError(f"n_base must be a power of two, got {n_base}")
    p = bounds.shape[0]
    u = sobol_points(n_base, 2 * p, seed)
    if sampler == "uniform":
        x = np.tile(bounds[:, 0], 2) + u * np.tile(bounds[:, 1] - bounds[:, 0], 2)
    elif sampler == "empirical":
        if marginals is None:
            raise DataError("empirical sampler needs marginals")
        marg = np.asarray(marginals, dtype=float)
        x = np.empty_like(u)
        for j in range(2 * p):
            x[:, j] = np.quantile(marg[:, j % p], u[:, j], method="inverted_cdf")
    else:
        raise DataError(f"unknown sampler {sampler!r}")
    A, B = x[:, :p].copy(), x[:, p:].copy()
    AB = np.repeat(A[None, :, :], p, axis=0)
    for i in range(p):
        AB[i, :, i] = B[:, i]
    return SobolDesign(A, B, AB, bounds, seed)


@dataclass(frozen=True)
class SobolIndices:
    features: tuple
    s1: np.ndarray
    st: np.ndarray
    s1_ci: np.ndarray  # (p, 2)
    st_ci: np.ndarray
    n_base: int
    evals: int
    variance: float
    constant: bool = False
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {"features": list(self.features), "s1": self.s1.tolist(), "st": self.st.tolist(),
                "s1_ci": self.s1_ci.tolist(), "st_ci": self.st_ci.tolist(),
                "n_base": self.n_base, "evals": self.evals, "variance": self.variance,
                "constant": self.constant, "metadata": self.metadata}

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("feature,s1,s1_lo,s1_hi,st,st_lo,st_hi\n")
            for i, f in enumerate(self.features):
                vals = (self.s1[i], self.s1_ci[i, 0], self.s1_ci[i, 1],
                        self.st[i], self.st_ci[i, 0], self.st_ci[i, 1])
                fh.write(f + "," + ",".join(repr(float(v)) for v in vals) + "\n")


def _estimate(fA, fB, fAB):
    V = np.var(np.concatenate([fA, fB]))
    s1 = np.mean(fB[None, :] * (fAB - fA[None, :]), axis=1) / V
    st = 0.5 * np.mean((fA[None, :] - fAB) ** 2, axis=1) / V
    return s1, st, V


def sobol_indices(model, design: SobolDesign, n_bootstrap: int = 200, seed: int = 0,
                  confidence: float = 0.95) -> SobolIndices:
    """First- and total-order indices of ``model`` over ``design``.

    A model whose output variance is below ``1e-12`` gets all-zero indices
    and ``constant=True``.
    """
    f = as_predict_fn(model)
    n, p = design.n_base, design.n_features
    y = f(design.stacked())
    fA, fB = y[:n], y[n:2 * n]
    fAB = y[2 * n:].reshape(p, n)
    names = feature_names_of(model, p)
    evals = n * (p + 2)
    V = float(np.var(np.concatenate([fA, fB])))
    if V < CONSTANT_VARIANCE:
        z = np.zeros(p)
        return SobolIndices(names, z, z.copy(), np.zeros((p, 2)), np.zeros((p, 2)), n, evals, V,
                            True, {"note": "constant model output"})
    s1, st, _ = _estimate(fA, fB, fAB)
    rng = np.random.default_rng(int(seed))
    bs1 = np.empty((n_bootstrap, p))
    bst = np.empty((n_bootstrap, p))
    for k in range(n_bootstrap):
        idx = rng.integers(0, n, n)
        bs1[k], bst[k], _ = _estimate(fA[idx], fB[idx], fAB[:, idx])
    a = (1 - confidence) / 2
    s1_ci = np.quantile(bs1, [a, 1 - a], axis=0).T if n_bootstrap else np.c_[s1, s1]
    st_ci = np.quantile(bst, [a, 1 - a], axis=0).T if n_bootstrap else np.c_[st, st]
    # percentile intervals can miss a skewed point estimate; widen to cover it
    s1_ci = np.c_[np.minimum(s1_ci[:, 0], s1), np.maximum(s1_ci[:, 1], s1)]
    st_ci = np.c_[np.minimum(st_ci[:, 0], st), np.maximum(st_ci[:, 1], st)]
    meta = {"n_bootstrap": int(n_bootstrap), "confidence": confidence, "bootstrap_seed": int(seed)}
    return SobolIndices(names, s1, st, s1_ci, st_ci, n, evals, V, False, meta)


def gsa_over_model(model, X_train, n_base: int = 4096, seed=None, sampler="uniform",
                   n_bootstrap: int = 200, bootstrap_seed: int = 0):
    """Sobol indices of a fitted model over the empirical range of its training data.

    ``X_train`` is an array or a Dataset (columns taken in the model's
    feature order).

    Inputs are sampled as independent uniforms over ``[min, max]`` of each
    training column (or from the empirical marginals), which ignores any
    correlation between features; the assumption is stamped into the
    metadata.  Returns ``(s1 result, st result, SobolIndices)``.
    """
    if isinstance(X_train, Dataset):
        names = getattr(model, "feature_names", None) or X_train.feature_names
        X_train = X_train.X(list(names))
    X_train = np.asarray(X_train, dtype=float)
    bounds = np.c_[X_train.min(axis=0), X_train.max(axis=0)]
    design = sobol_design(bounds, n_base, seed, sampler, marginals=X_train)
    ind = sobol_indices(model, design, n_bootstrap, bootstrap_seed)
    meta = {"n_base": int(n_base), "evals": ind.evals, "sampler": sampler,
            "assumption": "independent inputs" + (" uniform over observed range" if sampler == "uniform"
                                                 else " from empirical marginals"),
            "model_kind": getattr(model, "kind", "callable"),
            "constant": ind.constant}
    ind.metadata.update(meta)
    return (AttributionResult("gsa-s1", ind.features, ind.s1, dict(meta)),
            AttributionResult("gsa-st", ind.features, ind.st, dict(meta)), ind)
