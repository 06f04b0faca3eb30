"""Uniform fitted-model contract and JSON (de)serialisation."""

from __future__ import annotations

import json

import numpy as np
import pandas as pd

from ..errors import DataError, FeatureMismatchError, SchemaError

FORMAT_VERSION = 1
_REGISTRY: dict[str, type] = {}


def register(kind):
    def deco(cls):
        cls.kind = kind
        _REGISTRY[kind] = cls
        return cls
    return deco


def as_matrix(X, feature_names=None):
    """Return ``(array, names)`` from a DataFrame or a 2-D array."""
    if isinstance(X, pd.DataFrame):
        return X.to_numpy(dtype=float), list(X.columns)
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {arr.shape}")
    names = list(feature_names) if feature_names is not None else [f"x{i}" for i in range(arr.shape[1])]
    if len(names) != arr.shape[1]:
        raise DataError(f"{len(names)} feature names for {arr.shape[1]} columns")
    return arr, names


def check_xyw(X, y, w):
    y = np.asarray(y, dtype=float).ravel()
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float).ravel()
    if not (X.shape[0] == y.size == w.size):
        raise DataError(f"dimension mismatch: X has {X.shape[0]} rows, y {y.size}, w {w.size}")
    if np.any(np.isnan(X)) or np.any(np.isnan(y)):
        raise DataError("missing values in training data")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DataError("weights must be finite and non-negative")
    return y, w


class TrainedModel:
    """Immutable fitted regressor.

    Subclasses implement ``_predict`` on a validated float matrix and
    ``_state``/``_from_state`` for serialisation.
    """

    kind = "abstract"

    def __init__(self, feature_names, config):
        self.feature_names = tuple(feature_names)
        self.config = dict(config)

    def predict(self, X) -> np.ndarray:
        """Predict one value per row.

        DataFrames must carry exactly the training columns in training order;
        plain arrays must have the right width.
        """
        if isinstance(X, pd.DataFrame):
            cols = list(X.columns)
            if cols != list(self.feature_names):
                extra = [c for c in cols if c not in self.feature_names]
                missing = [c for c in self.feature_names if c not in cols]
                offending = extra + missing
                if not offending:
                    offending = [a for a, b in zip(cols, self.feature_names) if a != b]
                raise FeatureMismatchError(
                    f"feature mismatch: unexpected {extra}, missing {missing}"
                    + ("" if extra or missing else f", misordered {offending}"),
                    offending)
            arr = X.to_numpy(dtype=float)
        else:
            arr = np.asarray(X, dtype=float)
            if arr.ndim == 1 and arr.size == 0:
                arr = arr.reshape(0, len(self.feature_names))
            if arr.ndim != 2 or arr.shape[1] != len(self.feature_names):
                raise FeatureMismatchError(
                    f"expected {len(self.feature_names)} features {list(self.feature_names)}, "
                    f"got shape {arr.shape}", ())
        if arr.shape[0] == 0:
            return np.zeros(0)
        return self._predict(np.ascontiguousarray(arr))

    __call__ = predict

    def _predict(self, X):
        raise NotImplementedError

    # -- serialisation ----------------------------------------------------
    def to_dict(self):
        return {"kind": self.kind, "version": FORMAT_VERSION,
                "feature_names": list(self.feature_names), "config": self.config,
                "state": self._state()}

    def _state(self):
        raise NotImplementedError

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    def __repr__(self):
        return f"<{type(self).__name__} kind={self.kind} features={len(self.feature_names)}>"


def from_dict(d) -> TrainedModel:
    if d.get("version") != FORMAT_VERSION:
        raise SchemaError(f"unsupported model format version {d.get('version')!r}")
    cls = _REGISTRY.get(d.get("kind"))
    if cls is None:
        raise SchemaError(f"unknown model kind {d.get('kind')!r}")
    return cls._from_state(d["feature_names"], d["config"], d["state"])


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return from_dict(json.load(fh))


def predict(model: TrainedModel, X) -> np.ndarray:
    return model.predict(X)
