"""Synthetic data with planted ground truth.

Three generators:

* :func:`gen_linear_causal` -- partially linear data with a known treatment
  effect, for checking DML;
* :func:`gen_ishigami` -- the Ishigami test function with its analytic
  Sobol indices;
* :func:`gen_hydro` -- a borehole-year salinity table with hydrology-style
  column names, planted effect signs, inert columns, missing cells, and a
  few outliers above 4000 mg/L.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .dataset import ColumnSpec, Dataset, from_frame
from .errors import ConfigError


# ----------------------------------------------------------------------
# linear causal
# ----------------------------------------------------------------------

def gen_linear_causal(n: int, p: int, theta: float, seed: int = 0, noise_sd: float = 1.0,
                      treatment_noise_sd: float = 1.0, rho: float = 0.3, group_size: int = 1):
    """``Y = theta*T + X.beta + e`` with ``T = X.gamma + u``.

    ``X`` is standard normal with AR(1) correlation ``rho``.  Rows are
    grouped into drills of ``group_size`` rows for grouped cross-fitting.
    """
    if n < 50 or p < 1:
        raise ConfigError("gen_linear_causal needs n >= 50 and p >= 1")
    rng = np.random.default_rng(int(seed))
    idx = np.arange(p)
    cov = rho ** np.abs(idx[:, None] - idx[None, :])
    X = rng.standard_normal((n, p)) @ np.linalg.cholesky(cov).T
    gamma = rng.uniform(0.3, 1.0, p) * rng.choice([-1.0, 1.0], p)
    beta = rng.uniform(0.5, 1.5, p) * rng.choice([-1.0, 1.0], p)
    T = X @ gamma + treatment_noise_sd * rng.standard_normal(n)
    Y = theta * T + X @ beta + noise_sd * rng.standard_normal(n)
    names = [f"x{i + 1}" for i in range(p)]
    frame = pd.DataFrame(X, columns=names)
    frame.insert(0, "drill_id", [f"d{i // group_size:05d}" for i in range(n)])
    frame["t"] = T
    frame["y"] = Y
    cols = ([ColumnSpec("drill_id", "group-key")] + [ColumnSpec(c, "numeric") for c in names]
            + [ColumnSpec("t", "numeric"), ColumnSpec("y", "target")])
    truth = {"theta": float(theta), "gamma": gamma.tolist(), "beta": beta.tolist(),
             "treatment": "t", "outcome": "y", "covariates": names}
    return from_frame(frame, cols), truth


# ----------------------------------------------------------------------
# Ishigami
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class IshigamiProblem:
    a: float
    b: float
    bounds: tuple
    s1: tuple
    st: tuple
    variance: float

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (np.sin(X[:, 0]) + self.a * np.sin(X[:, 1]) ** 2
                + self.b * X[:, 2] ** 4 * np.sin(X[:, 0]))

    predict = __call__
    feature_names = ("x1", "x2", "x3")


def ishigami_indices(a=7.0, b=0.1):
    """Closed-form variance decomposition of the Ishigami function."""
    pi4 = math.pi ** 4
    v1 = 0.5 * (1 + b * pi4 / 5) ** 2
    v2 = a * a / 8
    v13 = 8 * b * b * math.pi ** 8 / 225
    v = v1 + v2 + v13
    return {"V": v, "S1": (v1 / v, v2 / v, 0.0), "ST": ((v1 + v13) / v, v2 / v, v13 / v)}


def gen_ishigami(n_unused=None, seed=None, a: float = 7.0, b: float = 0.1) -> IshigamiProblem:
    """Ishigami model over ``[-pi, pi]^3``; arguments ``n_unused``/``seed`` are accepted for API symmetry."""
    ind = ishigami_indices(a, b)
    bounds = ((-math.pi, math.pi),) * 3
    return IshigamiProblem(a, b, bounds, ind["S1"], ind["ST"], ind["V"])


# ----------------------------------------------------------------------
# hydro-style table
# ----------------------------------------------------------------------

def _default_effects():
    return {
        "precip_mm": {"coef": -1.2, "form": "linear"},
        "twi": {"coef": 55.0, "form": "linear"},
        "dist_saline_m": {"coef": -320.0, "form": "threshold", "cut": 3000.0},
        "max_temp_c": {"coef": 20.0, "form": "linear"},
        "tww_cl_mg_l": {"coef": 1.2e-5, "form": "interaction", "partner": "tww_irrigated_area_m2"},
        "drill_depth_m": {"coef": -0.5, "form": "linear"},
        "dist_river_m": {"coef": -0.02, "form": "linear"},
        "shoreline_dist_m": {"coef": 0.001, "form": "linear"},
    }


@dataclass(frozen=True)
class SynthSpec:
    n_drills: int = 200
    years_per_drill: int = 15
    basin_sizes: tuple = (80, 60, 30, 20, 10)
    effects: dict = field(default_factory=_default_effects)
    noise_sd: float = 70.0
    seed: int = 0
    base_level: float = 1200.0
    missing_fraction: float = 0.02
    n_outliers: int = 6
    start_year: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "basin_sizes", tuple(int(b) for b in self.basin_sizes))
        if sum(self.basin_sizes) != self.n_drills:
            raise ConfigError(f"basin sizes sum to {sum(self.basin_sizes)}, not n_drills={self.n_drills}")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be >= 0")
        if self.years_per_drill < 1 or any(b < 1 for b in self.basin_sizes):
            raise ConfigError("years_per_drill and basin sizes must be positive")
        for name, eff in self.effects.items():
            if name not in HYDRO_NUMERIC:
                raise ConfigError(f"effect on unknown column {name!r}")
            form = eff.get("form", "linear")
            if form not in ("linear", "threshold", "interaction"):
                raise ConfigError(f"unknown effect form {form!r}")
            if form == "interaction" and eff.get("partner") not in HYDRO_NUMERIC:
                raise ConfigError(f"interaction on {name!r} needs a known partner column")

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown synth spec keys {sorted(extra)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


# (name, kind, units); column order of the emitted table
HYDRO_COLUMNS = (
    ("drill_id", "group-key", None),
    ("basin", "categorical", None),
    ("year", "time-key", "year"),
    ("precip_mm", "numeric", "mm"),
    ("max_temp_c", "numeric", "degC"),
    ("min_temp_c", "numeric", "degC"),
    ("twi", "numeric", None),
    ("dist_saline_m", "numeric", "m"),
    ("dist_river_m", "numeric", "m"),
    ("shoreline_dist_m", "numeric", "m"),
    ("drill_depth_m", "numeric", "m"),
    ("tww_cl_mg_l", "numeric", "mg/L"),
    ("tww_irrigated_area_m2", "numeric", "m2"),
    ("agri_field_area_m2", "numeric", "m2"),
    ("clay_pct", "numeric", "%"),
    ("sand_pct", "numeric", "%"),
    ("silt_pct", "numeric", "%"),
    ("lulc", "categorical", None),
    ("population_density", "numeric", "people/km2"),
    ("fishponds_per_km2", "numeric", "1/km2"),
    ("factories_per_km2", "numeric", "1/km2"),
    ("cl_mg_l", "target", "mg/L"),
)
HYDRO_NUMERIC = tuple(n for n, k, _ in HYDRO_COLUMNS if k == "numeric")
HYDRO_INERT = ("min_temp_c", "clay_pct", "sand_pct", "silt_pct", "lulc", "population_density",
               "fishponds_per_km2", "factories_per_km2", "agri_field_area_m2")

_BASIN_PRECIP = (620.0, 500.0, 380.0, 250.0, 120.0)
_BASIN_TEMP = (26.0, 27.5, 29.0, 31.0, 33.0)


def hydro_schema():
    return tuple(ColumnSpec(n, k, u) for n, k, u in HYDRO_COLUMNS)


def _features(spec: SynthSpec, rng):
    nd, ny = spec.n_drills, spec.years_per_drill
    basin_of = np.repeat(np.arange(len(spec.basin_sizes)), spec.basin_sizes)
    # per-drill static attributes
    static = {
        "twi": np.clip(rng.normal(8.0, 2.5, nd), 1.0, 16.0),
        "dist_saline_m": rng.uniform(200.0, 8000.0, nd),
        "dist_river_m": rng.uniform(50.0, 3000.0, nd),
        "shoreline_dist_m": rng.uniform(0.0, 60000.0, nd),
        "drill_depth_m": rng.uniform(20.0, 200.0, nd),
        "tww_area0": rng.uniform(0.0, 5e5, nd),
        "agri_field_area_m2": rng.uniform(0.0, 1e6, nd),
        "clay_pct": rng.uniform(5.0, 45.0, nd),
        "sand_pct": rng.uniform(10.0, 70.0, nd),
        "silt_pct": rng.uniform(5.0, 40.0, nd),
        "lulc": rng.choice(np.array(["agricultural", "built", "natural"]), nd),
        "pop0": rng.lognormal(5.5, 1.0, nd),
        "fishponds_per_km2": rng.poisson(1.5, nd).astype(float),
        "factories_per_km2": rng.poisson(2.0, nd).astype(float),
        "drill_precip": rng.normal(0.0, 40.0, nd),
    }
    # per basin-year climate shocks
    nb = len(spec.basin_sizes)
    precip_shock = rng.normal(0.0, 70.0, (nb, ny))
    temp_shock = rng.normal(0.0, 1.0, (nb, ny))

    d = np.repeat(np.arange(nd), ny)
    t = np.tile(np.arange(ny), nd)
    b = basin_of[d]
    out = {
        "drill_id": np.array([f"D{i:04d}" for i in d]),
        "basin": np.array([f"B{i + 1}" for i in b]),
        "year": (spec.start_year + t).astype(float),
    }
    out["precip_mm"] = np.clip(np.asarray(_BASIN_PRECIP)[b % 5] + static["drill_precip"][d]
                               + precip_shock[b, t] + rng.normal(0.0, 25.0, d.size), 5.0, None)
    out["max_temp_c"] = (np.asarray(_BASIN_TEMP)[b % 5] + temp_shock[b, t]
                         + rng.normal(0.0, 0.8, d.size) + 0.03 * t)
    out["min_temp_c"] = out["max_temp_c"] - 12.0 + rng.normal(0.0, 0.25, d.size)
    for k in ("twi", "dist_saline_m", "dist_river_m", "shoreline_dist_m", "drill_depth_m",
              "agri_field_area_m2", "clay_pct", "sand_pct", "silt_pct",
              "fishponds_per_km2", "factories_per_km2"):
        out[k] = static[k][d]
    out["tww_cl_mg_l"] = rng.normal(250.0, 40.0, d.size)
    out["tww_irrigated_area_m2"] = static["tww_area0"][d] * (1.0 + 0.03 * t)
    out["lulc"] = static["lulc"][d]
    out["population_density"] = static["pop0"][d] * (1.0 + 0.02 * t) * rng.lognormal(0, 0.05, d.size)
    return out


def _effect_terms(spec: SynthSpec, cols):
    terms = {}
    for name, eff in spec.effects.items():
        x = cols[name]
        form = eff.get("form", "linear")
        coef = float(eff["coef"])
        if form == "linear":
            terms[name] = coef * (x - x.mean())
        elif form == "threshold":
            cut = float(eff.get("cut", np.median(x)))
            step = (x > cut).astype(float)
            terms[name] = coef * (step - step.mean())
        else:
            z = cols[eff["partner"]]
            terms[name] = coef * (x - x.mean()) * (z - z.mean())
    return terms


def gen_hydro(spec: SynthSpec | None = None):
    """Return ``(Dataset, truth)`` for one synthetic borehole-year table.

    ``truth`` records each planted effect, its sign, the inert columns,
    the variance contributed by every effect term and the resulting
    ``top_drivers`` ordering.
    """
    spec = spec or SynthSpec()
    rng = np.random.default_rng(int(spec.seed))
    cols = _features(spec, rng)
    terms = _effect_terms(spec, cols)
    signal = spec.base_level + sum(terms.values()) if terms else np.full(cols["year"].size, spec.base_level)
    y = signal + spec.noise_sd * rng.standard_normal(cols["year"].size)
    y = np.maximum(y, 1.0)
    n = y.size

    frame = pd.DataFrame({name: cols[name] for name, _, _ in HYDRO_COLUMNS if name != "cl_mg_l"})
    frame["cl_mg_l"] = y
    frame = frame.astype({c: object for c in ("drill_id", "basin", "lulc")})

    outlier_rows = np.sort(rng.choice(n, size=min(spec.n_outliers, n), replace=False))
    frame.loc[outlier_rows, "cl_mg_l"] = rng.uniform(4200.0, 9000.0, outlier_rows.size)

    missing_cols = list(HYDRO_NUMERIC) + ["lulc"]
    if spec.missing_fraction > 0:
        mask = rng.random((n, len(missing_cols))) < spec.missing_fraction
        for j, c in enumerate(missing_cols):
            if mask[:, j].any():
                frame.loc[mask[:, j], c] = None if c == "lulc" else np.nan

    variance = {k: float(np.var(v)) for k, v in terms.items()}
    top = sorted(variance, key=lambda k: (-variance[k], k))
    truth = {
        "spec": spec.to_dict(),
        "effects": {k: {"coef": float(v["coef"]), "form": v.get("form", "linear"),
                        "sign": int(np.sign(v["coef"])),
                        **({"cut": float(v["cut"])} if "cut" in v else {}),
                        **({"partner": v["partner"]} if "partner" in v else {})}
                    for k, v in spec.effects.items()},
        "inert": [c for c in HYDRO_INERT if c not in spec.effects],
        "term_variance": variance,
        "top_drivers": top,
        "noise_sd": float(spec.noise_sd),
        "outlier_rows": [int(i) for i in outlier_rows],
    }
    return from_frame(frame, hydro_schema()), truth


def write_truth(truth, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
