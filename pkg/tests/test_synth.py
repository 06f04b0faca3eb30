import json

import numpy as np
import pytest

from salix.dml import dml_effect
from salix.errors import ConfigError
from salix.models import LearnerSpec, fit_linear
from salix.synth import (HYDRO_COLUMNS, SynthSpec, gen_hydro, gen_ishigami, gen_linear_causal,
                         write_truth)

SMALL = dict(n_drills=20, years_per_drill=5, basin_sizes=(8, 6, 3, 2, 1))
LINEAR_EFFECTS = {"precip_mm": {"coef": -1.2}, "twi": {"coef": 55.0}, "max_temp_c": {"coef": 20.0},
                  "drill_depth_m": {"coef": -0.5}}


def test_linear_causal_shapes_and_truth():
    ds, truth = gen_linear_causal(200, 4, 1.5, seed=3)
    assert ds.n_rows == 200
    assert ds.names == ["drill_id", "x1", "x2", "x3", "x4", "t", "y"]
    assert truth["theta"] == 1.5 and len(truth["gamma"]) == 4


def test_linear_causal_ar1_structure():
    ds, _ = gen_linear_causal(20000, 3, 0.0, seed=1)
    c = np.corrcoef(ds.X(["x1", "x2", "x3"]), rowvar=False)
    assert c[0, 1] == pytest.approx(0.3, abs=0.03)
    assert c[0, 2] == pytest.approx(0.09, abs=0.03)


def test_linear_causal_noiseless_identification():
    ds, truth = gen_linear_causal(500, 3, 2.0, seed=7, noise_sd=0.0)
    est = dml_effect(ds, "t", "y", truth["covariates"], LearnerSpec("linear"))
    assert abs(est.theta - 2.0) <= 1e-6


def test_linear_causal_guards():
    with pytest.raises(ConfigError):
        gen_linear_causal(10, 2, 1.0)
    with pytest.raises(ConfigError):
        gen_linear_causal(100, 0, 1.0)


def test_ishigami_origin():
    assert gen_ishigami()(np.zeros((1, 3)))[0] == 0.0


def test_hydro_schema_and_defects():
    ds, truth = gen_hydro(SynthSpec(**SMALL, seed=2))
    assert ds.names == [c[0] for c in HYDRO_COLUMNS]
    assert ds.n_rows == 100
    y = ds.y()
    assert np.all(y[truth["outlier_rows"]] > 4000)
    assert 0 < ds.n_missing()
    assert set(truth["inert"]) >= {"fishponds_per_km2", "factories_per_km2"}
    assert truth["effects"]["precip_mm"]["sign"] == -1 and truth["effects"]["twi"]["sign"] == 1
    counts = ds.frame.groupby("basin")["drill_id"].nunique().sort_index().tolist()
    assert counts == [8, 6, 3, 2, 1]


def test_hydro_noiseless_linear_recovery():
    spec = SynthSpec(**SMALL, effects=LINEAR_EFFECTS, noise_sd=0.0, missing_fraction=0.0,
                     n_outliers=0, seed=1)
    ds, _ = gen_hydro(spec)
    names = ds.feature_names
    m = fit_linear(ds.X(names), ds.y(), feature_names=names)
    coef = dict(zip(names, m.coef))
    for name in names:
        want = LINEAR_EFFECTS.get(name, {"coef": 0.0})["coef"]
        assert abs(coef[name] - want) <= 1e-6


def test_hydro_deterministic_csv(tmp_path):
    for tag in "ab":
        ds, truth = gen_hydro(SynthSpec(**SMALL, seed=9))
        ds.to_csv(tmp_path / f"{tag}.csv")
        write_truth(truth, tmp_path / f"{tag}.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    ds2, _ = gen_hydro(SynthSpec(**SMALL, seed=10))
    ds2.to_csv(tmp_path / "c.csv")
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


@pytest.mark.parametrize("bad", [
    dict(n_drills=10, basin_sizes=(5, 4)),
    dict(noise_sd=-1.0),
    dict(effects={"nope": {"coef": 1.0}}),
    dict(effects={"twi": {"coef": 1.0, "form": "cubic"}}),
    dict(effects={"twi": {"coef": 1.0, "form": "interaction", "partner": "nope"}}),
])
def test_hydro_spec_validation(bad):
    kw = {**SMALL, **bad}
    with pytest.raises(ConfigError):
        SynthSpec(**kw)


def test_spec_from_dict_rejects_unknown():
    with pytest.raises(ConfigError):
        SynthSpec.from_dict({"n_drills": 5, "bogus": 1})
    spec = SynthSpec.from_dict(json.loads(json.dumps(SynthSpec(**SMALL).to_dict())))
    assert spec.basin_sizes == (8, 6, 3, 2, 1)


def test_top_drivers_ordered_by_term_variance():
    _, truth = gen_hydro(SynthSpec(**SMALL, seed=0))
    v = truth["term_variance"]
    assert [v[k] for k in truth["top_drivers"]] == sorted(v.values(), reverse=True)


@pytest.mark.slow
def test_inert_columns_not_significant_clustered():
    # default-size fixture, GBT nuisance, drill-clustered standard errors (~12 min)
    from salix.config import PreprocessConfig
    from salix.dml import _indicator_source
    from salix.pipeline import preprocess
    hits = {}
    for seed in range(20):
        ds, truth = gen_hydro(SynthSpec(seed=seed))
        raw = preprocess(ds, PreprocessConfig(standardize=False)).raw
        preds = raw.feature_names
        for name in preds:
            if name not in truth["inert"] and not name.startswith("lulc="):
                continue
            src = _indicator_source(name)
            covs = [c for c in preds if c != name and (src is None or _indicator_source(c) != src)]
            e = dml_effect(raw, name, raw.target, covs, LearnerSpec("gbt"), seed=seed, se="cluster")
            hits[name] = hits.get(name, 0) + (e.p_value > 0.05)
    assert len(hits) >= 9
    assert all(v >= 17 for v in hits.values()), hits
