import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, strategies as st

from salix.dataset import (ColumnSpec, SplitPlan, basin_weights, drop_low_variance,
                           filter_salinity_outliers, impute_mean, invert_scaler, load_csv,
                           load_schema, one_hot_encode, prune_correlated, save_schema,
                           standardize, temporal_split)
from salix.errors import DataError, KindError, PruningPreconditionError, SchemaError, UnimputableColumnError

from conftest import make_ds

SCHEMA = [ColumnSpec("drill_id", "group-key"), ColumnSpec("year", "time-key"),
          ColumnSpec("precip_mm", "numeric", "mm"), ColumnSpec("cl_mg_l", "target", "mg/L")]


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- load_csv -------------------------------------------------------------

def test_load_three_rows(tmp_path):
    p = _write(tmp_path, "drill_id,year,precip_mm,cl_mg_l\nA,2000,10.5,300\nA,2001,11,310\nB,2000,9,280\n")
    ds = load_csv(p, SCHEMA)
    assert ds.n_rows == 3
    assert ds.names == ["drill_id", "year", "precip_mm", "cl_mg_l"]
    assert ds.frame["precip_mm"].tolist() == [10.5, 11.0, 9.0]
    assert np.all(ds.weights == 1.0)
    assert ds.provenance[0].startswith("STEP load_csv")


def test_load_na_is_missing(tmp_path):
    p = _write(tmp_path, "drill_id,year,precip_mm,cl_mg_l\nA,2000,NA,300\nA,2001,oops,310\n")
    ds = load_csv(p, SCHEMA)
    assert np.isnan(ds.frame["precip_mm"]).all()
    assert ds.n_missing() == 2


def test_header_mismatch(tmp_path):
    p = _write(tmp_path, "precip,cl\n1,2\n")
    with pytest.raises(SchemaError):
        load_csv(p, [ColumnSpec("precip_mm", "numeric"), ColumnSpec("cl_mg_l", "target")])


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv", SCHEMA)


def test_duplicate_header(tmp_path):
    p = _write(tmp_path, "a,a,y\n1,2,3\n")
    with pytest.raises(SchemaError):
        load_csv(p, [ColumnSpec("a", "numeric"), ColumnSpec("b", "numeric"), ColumnSpec("y", "target")])


def test_schema_needs_one_target():
    with pytest.raises(SchemaError):
        make_ds({"a": [1.0], "b": [2.0]}, {})
    with pytest.raises(SchemaError):
        make_ds({"a": [1.0], "b": [2.0]}, {"a": "target", "b": "target"})


def test_schema_round_trip(tmp_path):
    save_schema(SCHEMA, tmp_path / "s.json")
    assert load_schema(tmp_path / "s.json") == tuple(SCHEMA)


def test_csv_round_trip_bit_exact(tmp_path, rng):
    vals = rng.standard_normal(50) * 1e3
    ds = make_ds({"x": vals, "y": rng.standard_normal(50)}, {"y": "target"})
    ds.to_csv(tmp_path / "r.csv")
    back = load_csv(tmp_path / "r.csv", ds.columns)
    assert np.array_equal(back.frame["x"].to_numpy(), vals)


# -- outliers -------------------------------------------------------------

def test_outlier_boundary():
    ds = make_ds({"y": [3999.0, 4000.0, 4001.0]}, {"y": "target"})
    assert filter_salinity_outliers(ds).frame["y"].tolist() == [3999.0, 4000.0]


def test_outlier_identity_and_empty():
    ds = make_ds({"y": [1.0, 2.0]}, {"y": "target"})
    assert filter_salinity_outliers(ds).frame.equals(ds.frame)
    ds = make_ds({"y": [5000.0, 6000.0]}, {"y": "target"})
    assert filter_salinity_outliers(ds).n_rows == 0


def test_outlier_drops_missing_target():
    ds = make_ds({"y": [1.0, np.nan, 3.0]}, {"y": "target"})
    assert filter_salinity_outliers(ds).frame["y"].tolist() == [1.0, 3.0]


@given(st.lists(st.floats(0, 1e4, allow_nan=False), min_size=1, max_size=30),
       st.floats(0, 1e4, allow_nan=False))
def test_outlier_gate(ys, tau):
    out = filter_salinity_outliers(make_ds({"y": ys}, {"y": "target"}), tau)
    assert out.n_rows == 0 or out.frame["y"].max() <= tau


# -- variance ---------------------------------------------------------------

def test_drop_constant_keep_varying():
    ds = make_ds({"c": [5.0, 5, 5], "v": [1.0, 2, 3], "y": [0.0, 0, 0]}, {"y": "target"})
    out = drop_low_variance(ds, 1e-12)
    assert out.names == ["v", "y"]
    assert drop_low_variance(ds, 0.0).names == ["v", "y"]


def test_variance_never_drops_keys():
    ds = make_ds({"g": ["a", "a"], "t": [1.0, 1.0], "y": [2.0, 2.0]},
                 {"g": "group-key", "t": "time-key", "y": "target"})
    assert drop_low_variance(ds).names == ["g", "t", "y"]


# -- correlation ------------------------------------------------------------

def test_prune_exact_multiple():
    a = np.arange(6, dtype=float)
    ds = make_ds({"A": a, "B": 2 * a, "y": a ** 2}, {"y": "target"})
    out = prune_correlated(ds)
    assert out.names == ["A", "y"]
    assert "dropped=[B]" in out.provenance[-1]


def test_prune_keeps_independent(rng):
    ds = make_ds({"a": rng.standard_normal(500), "b": rng.standard_normal(500),
                  "y": np.zeros(500)}, {"y": "target"})
    assert prune_correlated(ds).names == ["a", "b", "y"]


def test_prune_triplicate():
    a = np.array([0.3, 1.2, -0.7, 2.2, 0.1, -1.5, 0.9, 1.8, -0.2, 0.6])
    cols = {"A": a, "A1": 3 * a + 1, "A2": -a + 0.01 * np.arange(10), "y": np.arange(10.0)}
    # brute force: every pair of the three is above 0.95 in |r|
    for u, v in (("A", "A1"), ("A", "A2"), ("A1", "A2")):
        assert abs(np.corrcoef(cols[u], cols[v])[0, 1]) > 0.95
    out = prune_correlated(make_ds(cols, {"y": "target"}))
    assert out.names == ["A", "y"]


@given(st.integers(0, 2 ** 31), st.floats(0.3, 0.99))
def test_prune_leaves_no_high_pair(seed, thr):
    r = np.random.default_rng(seed)
    base = r.standard_normal((40, 3))
    X = np.column_stack([base, base @ r.standard_normal((3, 4)) + 0.1 * r.standard_normal((40, 4))])
    data = {f"x{i}": X[:, i] for i in range(X.shape[1])}
    data["y"] = r.standard_normal(40)
    out = prune_correlated(make_ds(data, {"y": "target"}), thr)
    feats = out.feature_names
    c = np.abs(np.corrcoef(out.X(feats), rowvar=False))
    np.fill_diagonal(c, 0)
    assert np.all(c <= thr)


# -- imputation -------------------------------------------------------------

def test_impute_numeric_mean():
    ds = make_ds({"x": [1.0, np.nan, 3.0], "y": [0.0, 1, 2]}, {"y": "target"})
    assert impute_mean(ds).frame["x"].tolist() == [1.0, 2.0, 3.0]


def test_impute_identity():
    ds = make_ds({"x": [1.0, 2.0], "y": [0.0, 1]}, {"y": "target"})
    assert impute_mean(ds).frame.equals(ds.frame)


def test_impute_categorical_mode():
    ds = make_ds({"l": ["ag", "ag", None, "natural"], "y": [0.0, 1, 2, 3]},
                 {"l": "categorical", "y": "target"})
    out = impute_mean(ds)
    assert out.frame["l"].tolist() == ["ag", "ag", "ag", "natural"]
    assert out.n_missing() == 0


def test_impute_mode_tie_is_lexicographic():
    ds = make_ds({"l": ["z", "b", None, "z", "b"], "y": [0.0] * 5}, {"l": "categorical", "y": "target"})
    assert impute_mean(ds).frame["l"][2] == "b"


def test_impute_all_missing_errors():
    ds = make_ds({"x": [np.nan, np.nan], "y": [0.0, 1]}, {"y": "target"})
    with pytest.raises(UnimputableColumnError):
        impute_mean(ds)


# -- one-hot ----------------------------------------------------------------

def test_one_hot_two_levels():
    ds = make_ds({"LULC": ["natural", "agricultural"], "y": [0.0, 1]}, {"LULC": "categorical", "y": "target"})
    out = one_hot_encode(ds, ["LULC"])
    assert out.names == ["LULC=agricultural", "LULC=natural", "y"]
    assert out.frame["LULC=agricultural"].tolist() == [0.0, 1.0]
    assert out.frame["LULC=natural"].tolist() == [1.0, 0.0]


def test_one_hot_single_level_then_variance():
    ds = make_ds({"c": ["x", "x", "x"], "y": [0.0, 1, 2]}, {"c": "categorical", "y": "target"})
    out = one_hot_encode(ds, ["c"])
    assert out.frame["c=x"].tolist() == [1.0, 1.0, 1.0]
    assert drop_low_variance(out).names == ["y"]


def test_one_hot_numeric_kind_error():
    ds = make_ds({"x": [1.0, 2.0], "y": [0.0, 1]}, {"y": "target"})
    with pytest.raises(KindError):
        one_hot_encode(ds, ["x"])


@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=25))
def test_one_hot_rows_sum_to_one(levels):
    ds = make_ds({"c": levels, "y": [0.0] * len(levels)}, {"c": "categorical", "y": "target"})
    out = one_hot_encode(ds, ["c"])
    ind = [n for n in out.names if n.startswith("c=")]
    assert len(ind) == len(set(levels))
    assert np.all(out.frame[ind].sum(axis=1).to_numpy() == 1.0)


def test_one_hot_five_rows_three_levels():
    ds = make_ds({"c": ["b", "a", "c", "a", "b"], "y": [0.0] * 5}, {"c": "categorical", "y": "target"})
    out = one_hot_encode(ds, ["c"])
    assert [n for n in out.names if n != "y"] == ["c=a", "c=b", "c=c"]
    assert np.all(out.X(["c=a", "c=b", "c=c"]).sum(axis=1) == 1.0)


# -- standardization --------------------------------------------------------

def test_standardize_symmetric():
    ds = make_ds({"x": [1.0, 2.0, 3.0], "y": [10.0, 20, 30]}, {"y": "target"})
    out, params = standardize(ds)
    assert out.frame["x"].tolist() == [-1.0, 0.0, 1.0]  # ddof=1: std of [1,2,3] is 1
    assert params.stds["x"] == 1.0
    assert out.frame["y"].tolist() == [10.0, 20.0, 30.0]


def test_standardize_idempotent_and_invertible(rng):
    x = rng.standard_normal(100) * 7 + 3
    ds = make_ds({"x": x, "y": x}, {"y": "target"})
    once, params = standardize(ds)
    twice, _ = standardize(once)
    assert np.allclose(once.frame["x"], twice.frame["x"], atol=1e-9)
    back = invert_scaler(once, params)
    assert np.allclose(back.frame["x"], x, atol=1e-9)


def test_standardize_zero_std_errors():
    ds = make_ds({"x": [1.0, 1.0], "y": [0.0, 1.0]}, {"y": "target"})
    with pytest.raises(PruningPreconditionError):
        standardize(ds)


# -- weights ------------------------------------------------------------------

def test_basin_weights_hand_example():
    ds = make_ds({"basin": list("AAAAB"), "y": [0.0] * 5}, {"basin": "categorical", "y": "target"})
    w = basin_weights(ds, "basin").weights
    assert np.allclose(w, [5 / 6] * 4 + [5 / 3], rtol=0, atol=1e-12)


def test_basin_weights_uniform_cases():
    ds = make_ds({"basin": list("AABB"), "y": [0.0] * 4}, {"basin": "categorical", "y": "target"})
    assert np.all(basin_weights(ds, "basin").weights == 1.0)
    ds = make_ds({"basin": list("AAA"), "y": [0.0] * 3}, {"basin": "categorical", "y": "target"})
    assert np.all(basin_weights(ds, "basin").weights == 1.0)


def test_basin_weights_empty():
    ds = make_ds({"basin": [], "y": []}, {"basin": "categorical", "y": "target"})
    with pytest.raises(DataError):
        basin_weights(ds, "basin")


def test_basin_weights_density_override():
    ds = make_ds({"basin": list("AAB"), "y": [0.0] * 3}, {"basin": "categorical", "y": "target"})
    w = basin_weights(ds, "basin", density={"A": 1.0, "B": 4.0}).weights
    assert np.isclose(w[0] / w[2], 2.0)


@given(st.lists(st.sampled_from("ABCDEFG"), min_size=1, max_size=60))
def test_weight_invariants(groups):
    ds = make_ds({"basin": groups, "y": [0.0] * len(groups)}, {"basin": "categorical", "y": "target"})
    w = basin_weights(ds, "basin").weights
    g = np.array(groups)
    assert abs(w.mean() - 1.0) <= 1e-9
    totals = {}
    for k in set(groups):
        wk = w[g == k]
        assert np.all(wk == wk[0])
        totals[k] = wk.sum()
    keys = sorted(totals)
    for a in keys:
        for b in keys:
            ratio = totals[a] / totals[b]
            want = math.sqrt(groups.count(a)) / math.sqrt(groups.count(b))
            assert abs(ratio - want) <= 1e-9 * max(1.0, want)


# -- temporal split -----------------------------------------------------------

def _drills(spec):
    ids, years = [], []
    for d, ys in spec.items():
        ids += [d] * len(ys)
        years += list(ys)
    return make_ds({"d": ids, "t": [float(y) for y in years], "y": [0.0] * len(ids)},
                   {"d": "group-key", "t": "time-key", "y": "target"})


def test_split_one_drill_tail():
    ds = _drills({"A": range(2000, 2010)})
    plan = temporal_split(ds, 0.2)
    assert ds.frame["t"][plan.valid].tolist() == [2008.0, 2009.0]


def test_split_single_row():
    plan = temporal_split(_drills({"A": [2000]}), 0.2)
    assert plan.train.tolist() == [0] and plan.valid.size == 0


def test_split_two_drills_of_five():
    ds = _drills({"A": [2004, 2000, 2003, 2001, 2002], "B": range(1990, 1995)})
    plan = temporal_split(ds, 0.2)
    v = ds.frame.iloc[plan.valid]
    assert len(v) == 2
    assert sorted(zip(v["d"], v["t"])) == [("A", 2004.0), ("B", 1994.0)]


def test_split_fraction_float_guard():
    plan = temporal_split(_drills({"A": range(15)}), 0.2)
    assert plan.valid.size == 3


@pytest.mark.parametrize("f", [0.0, 1.0, -0.1, 1.5])
def test_split_bad_fraction(f):
    with pytest.raises(DataError):
        temporal_split(_drills({"A": range(3)}), f)


@given(st.dictionaries(st.sampled_from("ABCDE"),
                       st.lists(st.integers(1990, 2020), min_size=1, max_size=12), min_size=1),
       st.floats(0.05, 0.95))
def test_split_invariants(spec, f):
    ds = _drills(spec)
    plan = temporal_split(ds, f)
    assert np.intersect1d(plan.train, plan.valid).size == 0
    assert sorted(np.concatenate([plan.train, plan.valid]).tolist()) == list(range(ds.n_rows))
    for d in spec:
        rows = np.flatnonzero(ds.frame["d"].to_numpy() == d)
        tr = [ds.frame["t"][i] for i in rows if i in set(plan.train)]
        va = [ds.frame["t"][i] for i in rows if i in set(plan.valid)]
        assert tr
        if va:
            assert max(tr) <= min(va)
    again = SplitPlan.from_dict(plan.to_dict())
    assert np.array_equal(again.train, plan.train)


# -- determinism ----------------------------------------------------------------

def test_pipeline_determinism(hydro_small, tmp_path):
    from salix.config import PreprocessConfig
    from salix.pipeline import preprocess, save_prepared
    a = preprocess(hydro_small[0], PreprocessConfig())
    b = preprocess(hydro_small[0], PreprocessConfig())
    save_prepared(a, tmp_path / "a")
    save_prepared(b, tmp_path / "b")
    for name in ("data.csv", "provenance.log", "weights.json", "split.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
