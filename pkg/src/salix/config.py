"""Run configuration: strict JSON mapped onto frozen dataclasses.

Every key is optional and falls back to the default shown here; unknown
keys are rejected with a :class:`ConfigError` naming the dotted path.
A full default config is produced by ``RunConfig().to_dict()``.

.. code-block:: text

    data.path                     input CSV (required for run_pipeline)
    data.schema                   schema JSON (required for run_pipeline)
    preprocess.filter_outliers    true
    preprocess.outlier_threshold  4000.0   rows with target > threshold dropped
    preprocess.impute             true     mean / mode imputation
    preprocess.one_hot            ["lulc"] categorical columns to encode
    preprocess.drop_low_variance  true
    preprocess.variance_eps       1e-12
    preprocess.prune_correlated   true
    preprocess.correlation_threshold 0.95
    preprocess.weight_group       "basin"  null disables density weighting
    preprocess.density            null     optional {group: density} override
    preprocess.valid_fraction     0.2
    preprocess.standardize        true     features only, target kept in units
    models                        {"linear": {}, "forest": {}, "gbt": {}}
    dml.enabled                   true
    dml.outcome                   null     defaults to the target column
    dml.learner                   {"kind": "gbt", "params": {}}
    dml.k_folds                   5
    dml.alpha                     0.05
    dml.standardize_before_dml    false
    dml.intercept                 false
    dml.se                        "hc0"    or "cluster" (by drill id)
    attribution.models            null     null = every configured model
    attribution.rfe.enabled       true
    attribution.rfe.learner       {"kind": "forest", "params": {}}
    attribution.rfe.min_features  1
    attribution.shap.enabled      true
    attribution.shap.mode         "auto"   exact up to 10 features, else kernel
    attribution.shap.n_coalitions 512
    attribution.shap.rows         30       validation rows explained
    attribution.shap.background   100
    attribution.gsa.enabled       true
    attribution.gsa.n_base        4096
    attribution.gsa.sampler       "uniform"
    attribution.gsa.n_bootstrap   200
    attribution.gsa.scramble      false
    seed                          0
    out                           "salix-out"
"""

from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field

from .errors import ConfigError
from .models import KINDS, LearnerSpec


@dataclass(frozen=True)
class DataConfig:
    path: str | None = None
    schema: str | None = None


@dataclass(frozen=True)
class PreprocessConfig:
    filter_outliers: bool = True
    outlier_threshold: float = 4000.0
    impute: bool = True
    one_hot: tuple = ("lulc",)
    drop_low_variance: bool = True
    variance_eps: float = 1e-12
    prune_correlated: bool = True
    correlation_threshold: float = 0.95
    weight_group: str | None = "basin"
    density: dict | None = None
    valid_fraction: float = 0.2
    standardize: bool = True

    def __post_init__(self):
        if not 0.0 < self.valid_fraction < 1.0:
            raise ConfigError("preprocess.valid_fraction must lie in (0, 1)")
        if not 0.0 < self.correlation_threshold <= 1.0:
            raise ConfigError("preprocess.correlation_threshold must lie in (0, 1]")


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "gbt"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")

    def spec(self) -> LearnerSpec:
        return LearnerSpec(self.kind, dict(self.params))


@dataclass(frozen=True)
class DmlConfig:
    enabled: bool = True
    outcome: str | None = None
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    k_folds: int = 5
    alpha: float = 0.05
    standardize_before_dml: bool = False
    intercept: bool = False
    se: str = "hc0"

    def __post_init__(self):
        if self.se not in ("hc0", "cluster"):
            raise ConfigError(f"dml.se must be hc0|cluster, got {self.se!r}")
        if self.k_folds < 2:
            raise ConfigError("dml.k_folds must be >= 2")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("dml.alpha must lie in (0, 1)")


@dataclass(frozen=True)
class RfeConfig:
    enabled: bool = True
    learner: LearnerConfig = field(default_factory=lambda: LearnerConfig("forest"))
    min_features: int = 1


@dataclass(frozen=True)
class ShapConfig:
    enabled: bool = True
    mode: str = "auto"
    n_coalitions: int = 512
    rows: int = 30
    background: int = 100

    def __post_init__(self):
        if self.mode not in ("auto", "exact", "kernel"):
            raise ConfigError(f"attribution.shap.mode must be auto|exact|kernel, got {self.mode!r}")
        if self.rows < 1 or self.background < 1:
            raise ConfigError("attribution.shap.rows and background must be >= 1")


@dataclass(frozen=True)
class GsaConfig:
    enabled: bool = True
    n_base: int = 4096
    sampler: str = "uniform"
    n_bootstrap: int = 200
    scramble: bool = False

    def __post_init__(self):
        if self.sampler not in ("uniform", "empirical"):
            raise ConfigError(f"attribution.gsa.sampler must be uniform|empirical, got {self.sampler!r}")
        if self.n_base < 2 or self.n_base & (self.n_base - 1):
            raise ConfigError(f"attribution.gsa.n_base must be a power of two, got {self.n_base}")


@dataclass(frozen=True)
class AttributionConfig:
    models: tuple | None = None
    rfe: RfeConfig = field(default_factory=RfeConfig)
    shap: ShapConfig = field(default_factory=ShapConfig)
    gsa: GsaConfig = field(default_factory=GsaConfig)


def _default_models():
    return {"linear": {}, "forest": {}, "gbt": {}}


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    models: dict = field(default_factory=_default_models)
    dml: DmlConfig = field(default_factory=DmlConfig)
    attribution: AttributionConfig = field(default_factory=AttributionConfig)
    seed: int = 0
    out: str = "salix-out"

    def __post_init__(self):
        if not self.models:
            raise ConfigError("models must name at least one model kind")
        for kind, params in self.models.items():
            if kind not in KINDS:
                raise ConfigError(f"models.{kind}: unknown model kind")
            if not isinstance(params, dict):
                raise ConfigError(f"models.{kind} must be an object")
        for m in self.attribution.models or ():
            if m not in self.models:
                raise ConfigError(f"attribution.models: {m!r} is not a configured model")

    def learner(self, kind) -> LearnerSpec:
        return LearnerSpec(kind, dict(self.models[kind]))

    @property
    def attributed_models(self):
        return tuple(self.attribution.models) if self.attribution.models else tuple(self.models)

    def to_dict(self):
        return _to_plain(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        return _build(cls, d, "")

    @classmethod
    def from_json(cls, text) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _is_dc(tp):
    return isinstance(tp, type) and dataclasses.is_dataclass(tp)


def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(args[0], value, path)
    if _is_dc(tp):
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if tp is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return tuple(value)
    if tp is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object, got {value!r}")
        return value
    return value


def _build(cls, d, prefix):
    if not isinstance(d, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in d:
        if key not in names:
            raise ConfigError(f"unknown config key {(prefix + '.' if prefix else '') + key!r}")
    kwargs = {k: _coerce(hints[k], v, (prefix + "." if prefix else "") + k) for k, v in d.items()}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{prefix or 'config'}: {exc}") from exc
