"""Tabular data model, CSV ingestion and the preprocessing chain.

A :class:`Dataset` is an immutable bundle of typed columns, per-row sample
weights and a provenance log.  Every transform returns a new dataset and
appends one ``STEP`` line to the log::

    STEP <name> <param=value ...> <rows_before>-><rows_after>

Missing cells are ``NaN`` in numeric columns and ``None`` in string columns.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import (
    DataError,
    KindError,
    PruningPreconditionError,
    SchemaError,
    UnimputableColumnError,
)

KINDS = ("numeric", "categorical", "group-key", "time-key", "target")
NUMERIC_KINDS = ("numeric", "time-key", "target")
MISSING_TOKENS = ("", "NA")


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    units: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")

    def to_dict(self):
        return {"name": self.name, "kind": self.kind, "units": self.units}


def validate_schema(columns: Sequence[ColumnSpec]) -> tuple[ColumnSpec, ...]:
    columns = tuple(columns)
    names = [c.name for c in columns]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise SchemaError(f"duplicate column names: {dupes}")
    kinds = [c.kind for c in columns]
    if kinds.count("target") != 1:
        raise SchemaError(f"schema needs exactly one target column, got {kinds.count('target')}")
    for k in ("group-key", "time-key"):
        if kinds.count(k) > 1:
            raise SchemaError(f"at most one {k} column allowed")
    return columns


def load_schema(path) -> tuple[ColumnSpec, ...]:
    """Read a JSON array of ``{name, kind, units}`` objects."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise SchemaError("schema file must hold a JSON array")
    cols = []
    for item in raw:
        extra = set(item) - {"name", "kind", "units"}
        if extra:
            raise SchemaError(f"unknown schema keys {sorted(extra)}")
        cols.append(ColumnSpec(item["name"], item["kind"], item.get("units")))
    return validate_schema(cols)


def save_schema(columns: Iterable[ColumnSpec], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([c.to_dict() for c in columns], fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class Dataset:
    columns: tuple[ColumnSpec, ...]
    frame: pd.DataFrame
    weights: np.ndarray
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        cols = validate_schema(self.columns)
        object.__setattr__(self, "columns", cols)
        if list(self.frame.columns) != [c.name for c in cols]:
            raise SchemaError("frame columns do not match the column specs")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.frame),):
            raise DataError("weights must have one entry per row")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise DataError("weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    # -- accessors -----------------------------------------------------
    @property
    def n_rows(self) -> int:
        return len(self.frame)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def spec(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def _of_kind(self, kind):
        cols = [c.name for c in self.columns if c.kind == kind]
        return cols[0] if cols else None

    @property
    def target(self) -> str:
        return self._of_kind("target")

    @property
    def group_key(self) -> str | None:
        return self._of_kind("group-key")

    @property
    def time_key(self) -> str | None:
        return self._of_kind("time-key")

    @property
    def feature_names(self) -> list[str]:
        """Numeric predictor columns, in schema order."""
        return [c.name for c in self.columns if c.kind == "numeric"]

    def X(self, names: Sequence[str] | None = None) -> np.ndarray:
        names = self.feature_names if names is None else list(names)
        return self.frame[names].to_numpy(dtype=float)

    def y(self) -> np.ndarray:
        return self.frame[self.target].to_numpy(dtype=float)

    def features_frame(self) -> pd.DataFrame:
        return self.frame[self.feature_names]

    def n_missing(self) -> int:
        return int(self.frame.isna().to_numpy().sum())

    # -- derivation helpers -------------------------------------------
    def _derive(self, frame=None, columns=None, weights=None, step=None):
        frame = self.frame if frame is None else frame
        columns = self.columns if columns is None else tuple(columns)
        weights = self.weights if weights is None else weights
        prov = self.provenance if step is None else self.provenance + (step,)
        return Dataset(columns, frame.reset_index(drop=True), np.array(weights, dtype=float), prov)

    def take(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.columns, self.frame.iloc[rows].reset_index(drop=True),
                       self.weights[rows].copy(), self.provenance)

    def with_weights(self, weights) -> "Dataset":
        return Dataset(self.columns, self.frame, np.array(weights, dtype=float), self.provenance)

    def with_step(self, line: str) -> "Dataset":
        return Dataset(self.columns, self.frame, self.weights, self.provenance + (line,))

    def to_csv(self, path) -> None:
        out = self.frame.copy()
        for c in self.columns:
            if c.kind not in NUMERIC_KINDS:
                out[c.name] = out[c.name].where(out[c.name].notna(), "")
        out.to_csv(path, index=False, na_rep="NA", lineterminator="\n")


def _step(name: str, params: Mapping[str, object], before: int, after: int) -> str:
    parts = [f"STEP {name}"]
    parts += [f"{k}={_fmt(v)}" for k, v in params.items()]
    parts.append(f"{before}->{after}")
    return " ".join(parts)


def _fmt(v):
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(str(x) for x in v) + "]"
    return repr(v) if isinstance(v, float) else str(v)


def _parse_float(v):
    if v is None or v in MISSING_TOKENS:
        return np.nan
    try:
        return float(v)
    except (TypeError, ValueError):
        return np.nan


def _coerce_frame(raw: pd.DataFrame, columns: Sequence[ColumnSpec]) -> pd.DataFrame:
    out = {}
    for c in columns:
        s = raw[c.name]
        if c.kind in NUMERIC_KINDS:
            if s.dtype == object:
                # float() round-trips repr output exactly; pandas' parser can be 1 ulp off
                s = s.map(_parse_float)
            out[c.name] = pd.to_numeric(s, errors="coerce").astype(float)
        else:
            s = s.astype(object)
            s = s.where(s.notna(), None)
            s = s.map(lambda v: None if v is None or v in MISSING_TOKENS else str(v))
            out[c.name] = s.astype(object)
    return pd.DataFrame(out, columns=[c.name for c in columns])


def from_frame(frame: pd.DataFrame, columns: Sequence[ColumnSpec], weights=None) -> Dataset:
    """Build a dataset from an in-memory frame, coercing cells per column kind."""
    columns = validate_schema(columns)
    missing = [c.name for c in columns if c.name not in frame.columns]
    if missing:
        raise SchemaError(f"frame lacks columns {missing}")
    data = _coerce_frame(frame, columns)
    w = np.ones(len(data)) if weights is None else np.asarray(weights, dtype=float)
    return Dataset(columns, data, w)


def load_csv(path, schema: Sequence[ColumnSpec]) -> Dataset:
    """Parse a UTF-8 CSV whose header must equal the schema names, in order.

    Empty cells and ``NA`` are missing; unparseable numeric cells also become
    missing.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    schema = validate_schema(schema)
    with path.open(newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise SchemaError(f"{path} is empty")
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise SchemaError(f"duplicate column names in {path}: {dupes}")
    expected = [c.name for c in schema]
    if header != expected:
        raise SchemaError(f"header {header} does not match schema {expected}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    ds = from_frame(raw, schema)
    return ds.with_step(_step("load_csv", {"path": path.name}, 0, ds.n_rows))


# ----------------------------------------------------------------------
# preprocessing operations
# ----------------------------------------------------------------------

def filter_salinity_outliers(ds: Dataset, threshold: float = 4000.0) -> Dataset:
    """Drop rows whose target exceeds ``threshold`` or is missing.

    A value equal to the threshold is kept.
    """
    y = ds.frame[ds.target].to_numpy(dtype=float)
    keep = np.flatnonzero(~np.isnan(y) & (y <= threshold))
    out = ds.take(keep)
    return out.with_step(_step("filter_salinity_outliers", {"threshold": float(threshold)},
                               ds.n_rows, out.n_rows))


def drop_low_variance(ds: Dataset, eps: float = 1e-12) -> Dataset:
    """Remove numeric predictors whose sample variance (ddof=1) is <= eps."""
    drop = []
    for name in ds.feature_names:
        v = ds.frame[name].to_numpy(dtype=float)
        v = v[~np.isnan(v)]
        var = float(np.var(v, ddof=1)) if v.size >= 2 else 0.0
        if var <= eps:
            drop.append(name)
    keep = [c for c in ds.columns if c.name not in drop]
    step = _step("drop_low_variance", {"eps": float(eps), "dropped": drop}, ds.n_rows, ds.n_rows)
    return ds._derive(frame=ds.frame[[c.name for c in keep]], columns=keep, step=step)


def correlation_matrix(ds: Dataset, names: Sequence[str] | None = None) -> np.ndarray:
    """Pearson correlations over rows where both cells are present."""
    names = ds.feature_names if names is None else list(names)
    return ds.frame[names].astype(float).corr(method="pearson").to_numpy()


def prune_correlated(ds: Dataset, threshold: float = 0.95) -> Dataset:
    """Greedy left-to-right pruning of predictors with ``|r| > threshold``.

    For each surviving column, every later column correlated above the
    threshold with it is dropped.
    """
    names = ds.feature_names
    r = np.abs(correlation_matrix(ds, names))
    dropped: list[str] = []
    alive = np.ones(len(names), dtype=bool)
    for i in range(len(names)):
        if not alive[i]:
            continue
        for j in range(i + 1, len(names)):
            if alive[j] and r[i, j] > threshold:  # NaN compares False
                alive[j] = False
                dropped.append(names[j])
    keep = [c for c in ds.columns if c.name not in dropped]
    step = _step("prune_correlated", {"threshold": float(threshold), "dropped": dropped},
                 ds.n_rows, ds.n_rows)
    return ds._derive(frame=ds.frame[[c.name for c in keep]], columns=keep, step=step)


def _mode(values: pd.Series):
    counts = values.dropna().value_counts()
    top = counts[counts == counts.max()]
    return sorted(top.index)[0]


def impute_mean(ds: Dataset) -> Dataset:
    """Fill numeric gaps with the unweighted column mean, string gaps with the mode.

    Mode ties resolve to the lexicographically smallest level.
    """
    frame = ds.frame.copy()
    filled = []
    for c in ds.columns:
        s = frame[c.name]
        mask = s.isna()
        if not mask.any():
            continue
        if mask.all():
            raise UnimputableColumnError(f"column {c.name!r} has no observed values")
        if c.kind in NUMERIC_KINDS:
            frame[c.name] = s.fillna(float(s.mean()))
        else:
            frame[c.name] = s.where(~mask, _mode(s)).astype(object)
        filled.append(f"{c.name}:{int(mask.sum())}")
    step = _step("impute_mean", {"filled": filled}, ds.n_rows, ds.n_rows)
    return ds._derive(frame=frame, step=step)


def one_hot_encode(ds: Dataset, columns: Sequence[str]) -> Dataset:
    """Replace categorical columns with ``<col>=<level>`` 0/1 indicators.

    Levels are sorted lexicographically and the indicators take the position
    of the source column.
    """
    frame = ds.frame
    new_cols: list[ColumnSpec] = []
    parts = {}
    targets = set(columns)
    for name in columns:
        if ds.spec(name).kind != "categorical":
            raise KindError(f"column {name!r} is {ds.spec(name).kind}, not categorical")
        if frame[name].isna().any():
            raise DataError(f"column {name!r} has missing cells; impute before encoding")
    for c in ds.columns:
        if c.name not in targets:
            new_cols.append(c)
            parts[c.name] = frame[c.name]
            continue
        s = frame[c.name].astype(str)
        for level in sorted(s.unique()):
            col = f"{c.name}={level}"
            new_cols.append(ColumnSpec(col, "numeric", None))
            parts[col] = (s == level).astype(float)
    out = pd.DataFrame(parts, columns=[c.name for c in new_cols])
    step = _step("one_hot_encode", {"columns": list(columns)}, ds.n_rows, ds.n_rows)
    return ds._derive(frame=out, columns=new_cols, step=step)


@dataclass(frozen=True)
class ScalerParams:
    """Per-column mean and sample standard deviation (ddof=1)."""

    means: dict = field(default_factory=dict)
    stds: dict = field(default_factory=dict)

    def to_dict(self):
        return {"means": dict(self.means), "stds": dict(self.stds)}

    @classmethod
    def from_dict(cls, d):
        return cls({k: float(v) for k, v in d["means"].items()},
                   {k: float(v) for k, v in d["stds"].items()})


def standardize(ds: Dataset) -> tuple[Dataset, ScalerParams]:
    """Scale numeric predictors to zero mean and unit sample std; target untouched."""
    means, stds = {}, {}
    for name in ds.feature_names:
        v = ds.frame[name].to_numpy(dtype=float)
        if np.isnan(v).any():
            raise DataError(f"column {name!r} has missing cells; impute before scaling")
        sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
        if not sd > 0:
            raise PruningPreconditionError(f"column {name!r} has zero variance; prune it first")
        means[name] = float(np.mean(v))
        stds[name] = sd
    params = ScalerParams(means, stds)
    out = apply_scaler(ds, params)
    return out.with_step(_step("standardize", {"columns": len(means)}, ds.n_rows, ds.n_rows)), params


def apply_scaler(ds: Dataset, params: ScalerParams) -> Dataset:
    frame = ds.frame.copy()
    for name, mu in params.means.items():
        frame[name] = (frame[name].to_numpy(dtype=float) - mu) / params.stds[name]
    return ds._derive(frame=frame)


def invert_scaler(ds: Dataset, params: ScalerParams) -> Dataset:
    frame = ds.frame.copy()
    for name, mu in params.means.items():
        frame[name] = frame[name].to_numpy(dtype=float) * params.stds[name] + mu
    return ds._derive(frame=frame)


def finalize_weights(ds: Dataset) -> Dataset:
    """Rescale weights by one constant so that their mean is 1."""
    if ds.n_rows == 0:
        raise DataError("cannot normalise weights of an empty dataset")
    w = ds.weights
    mean = float(np.mean(w))
    if not mean > 0:
        raise DataError("weights sum to zero")
    return ds.with_weights(w / mean)


def basin_weights(ds: Dataset, group: str, density: Mapping[str, float] | None = None) -> Dataset:
    """Inverse square-root density weights, normalised to mean 1.

    Each row of group ``g`` gets ``1 / sqrt(n_g)`` where ``n_g`` is the row
    count of ``g`` in the dataset, or ``density[g]`` when a map is supplied.
    """
    if ds.n_rows == 0:
        raise DataError("basin_weights on an empty dataset")
    keys = ds.frame[group]
    if keys.isna().any():
        raise DataError(f"group column {group!r} has missing cells")
    keys = keys.astype(str)
    if density is None:
        counts = keys.value_counts()
        dens = {k: float(counts[k]) for k in counts.index}
    else:
        dens = {str(k): float(v) for k, v in density.items()}
        missing = sorted(set(keys) - set(dens))
        if missing:
            raise DataError(f"density map lacks groups {missing}")
    raw = {k: 1.0 / math.sqrt(v) for k, v in dens.items()}
    w = keys.map(raw).to_numpy(dtype=float)
    out = finalize_weights(ds.with_weights(w))
    src = "rows" if density is None else "external"
    return out.with_step(_step("basin_weights", {"group": group, "density": src},
                               ds.n_rows, ds.n_rows))


@dataclass(frozen=True)
class SplitPlan:
    train: np.ndarray
    valid: np.ndarray
    rule: str

    def to_dict(self):
        return {"train": [int(i) for i in self.train], "valid": [int(i) for i in self.valid],
                "rule": self.rule}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["train"], dtype=int), np.asarray(d["valid"], dtype=int), d["rule"])


def temporal_split(ds: Dataset, valid_fraction: float = 0.2) -> SplitPlan:
    """Per-drill chronological split: the latest ``ceil(f*n)`` rows validate.

    Every group keeps at least one training row, so single-row groups go
    entirely to training.
    """
    if not 0.0 < valid_fraction < 1.0:
        raise DataError(f"valid_fraction must lie in (0, 1), got {valid_fraction}")
    g, t = ds.group_key, ds.time_key
    if g is None or t is None:
        raise DataError("temporal_split needs a group-key and a time-key column")
    years = ds.frame[t].to_numpy(dtype=float)
    groups = ds.frame[g].astype(str).to_numpy()
    train, valid = [], []
    for key in sorted(set(groups)):
        rows = np.flatnonzero(groups == key)
        rows = rows[np.argsort(years[rows], kind="stable")]
        # guard against 0.2 * 15 = 3.0000000000000004
        n_valid = min(math.ceil(valid_fraction * rows.size - 1e-9), rows.size - 1)
        cut = rows.size - n_valid
        train.extend(rows[:cut])
        valid.extend(rows[cut:])
    rule = f"temporal group={g} time={t} valid_fraction={valid_fraction!r}"
    return SplitPlan(np.sort(np.array(train, dtype=int)), np.sort(np.array(valid, dtype=int)), rule)
