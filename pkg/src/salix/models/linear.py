"""Weighted least squares regression."""

import numpy as np

from ..errors import DataError
from .base import TrainedModel, as_matrix, check_xyw, register

RIDGE_JITTER = 1e-8


@register("linear")
class LinearModel(TrainedModel):
    def __init__(self, feature_names, config, intercept, coef):
        super().__init__(feature_names, config)
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=float)
        self.coef.setflags(write=False)

    def _predict(self, X):
        return self.intercept + X @ self.coef

    def _state(self):
        return {"intercept": self.intercept, "coef": self.coef.tolist()}

    @classmethod
    def _from_state(cls, names, config, state):
        return cls(names, config, state["intercept"], state["coef"])


def fit_linear(X, y, w=None, feature_names=None) -> LinearModel:
    """Minimise ``sum w_i (y_i - b0 - b.x_i)^2``.

    Solved through the normal equations on weighted-centred data, with a
    ``1e-8`` ridge jitter on the Gram diagonal so rank-deficient designs
    (e.g. a full one-hot block) still solve.
    """
    X, names = as_matrix(X, feature_names)
    y, w = check_xyw(X, y, w)
    if X.shape[0] < 2:
        raise DataError("fit_linear needs at least 2 rows")
    sw = w.sum()
    if not sw > 0:
        raise DataError("weights sum to zero")
    xm = w @ X / sw
    ym = float(w @ y / sw)
    Xc = X - xm
    yc = y - ym
    gram = (Xc * w[:, None]).T @ Xc
    gram[np.diag_indices_from(gram)] += RIDGE_JITTER
    rhs = (Xc * w[:, None]).T @ yc
    coef = np.linalg.solve(gram, rhs) if X.shape[1] else np.zeros(0)
    intercept = ym - float(xm @ coef)
    return LinearModel(names, {"ridge_jitter": RIDGE_JITTER}, intercept, coef)
