import numpy as np
import pytest

from salix.attribution import AttributionResult, RankComparison, comparison_table, rank_compare, rfe
from salix.attribution.compare import load_results
from salix.dataset import SplitPlan
from salix.errors import ConfigError, FeatureMismatchError
from salix.models import LearnerSpec

from conftest import make_ds

SMALL_FOREST = LearnerSpec("forest", {"n_trees": 20})


def _planted(seed, n=400, n_noise=8, dup=False):
    r = np.random.default_rng(seed)
    d = {"inf1": r.standard_normal(n), "inf2": r.standard_normal(n)}
    for k in range(n_noise):
        d[f"noise{k}"] = r.standard_normal(n)
    if dup:
        d["noise_dup"] = d["noise0"].copy()
    d["y"] = 3 * d["inf1"] - 2 * d["inf2"] ** 2 + 0.5 * r.standard_normal(n)
    ds = make_ds(d, {"y": "target"})
    split = SplitPlan(np.arange(300), np.arange(300, n), "tail")
    return ds, split


def test_selects_informative_features():
    hits = 0
    for seed in range(5):
        ds, split = _planted(seed)
        trace = rfe(ds, SMALL_FOREST, split, seed=seed)
        hits += {"inf1", "inf2"} <= set(trace.selected)
    assert hits >= 4


def test_min_features_equals_p():
    ds, split = _planted(0, n_noise=2)
    trace = rfe(ds, SMALL_FOREST, split, min_features=4)
    assert len(trace.subsets) == 1 and trace.eliminated == []


def test_single_feature():
    ds = make_ds({"a": np.arange(20.0), "y": np.arange(20.0) ** 2}, {"y": "target"})
    trace = rfe(ds, SMALL_FOREST, SplitPlan(np.arange(15), np.arange(15, 20), "tail"))
    assert len(trace.subsets) == 1 and trace.selected == ("a",)
    assert trace.to_result().scores.tolist() == [1.0]


def test_trace_structure_and_order():
    ds, split = _planted(1, n_noise=3)
    trace = rfe(ds, SMALL_FOREST, split, seed=1)
    p = len(ds.feature_names)
    assert [len(s) for s in trace.subsets] == list(range(p, 0, -1))
    assert len(trace.eliminated) == p - 1
    assert sorted(trace.order()) == sorted(ds.feature_names)
    res = trace.to_result()
    assert sorted(res.scores.tolist()) == [float(i) for i in range(1, p + 1)]
    assert res.as_dict()[trace.eliminated[0]] == 1.0
    best = trace.r2[trace.best_step]
    assert best == max(trace.r2)
    assert all(r < best for r in trace.r2[trace.best_step + 1:])


def test_rfe_deterministic():
    ds, split = _planted(2)
    a = rfe(ds, SMALL_FOREST, split, seed=4).to_dict()
    b = rfe(ds, SMALL_FOREST, split, seed=4).to_dict()
    assert a == b


def test_duplicate_noise_removed_before_informative():
    ok = 0
    for seed in range(5):
        ds, split = _planted(seed, n_noise=3, dup=True)
        order = rfe(ds, SMALL_FOREST, split, seed=seed).order()
        first_dup = min(order.index("noise0"), order.index("noise_dup"))
        ok += first_dup < min(order.index("inf1"), order.index("inf2"))
    assert ok >= 4


def test_rfe_rejects_bad_config():
    ds, split = _planted(0, n_noise=1)
    with pytest.raises(ConfigError):
        rfe(ds, LearnerSpec("linear"), split)
    with pytest.raises(ConfigError):
        rfe(ds, SMALL_FOREST, split, min_features=0)
    with pytest.raises(ConfigError):
        rfe(ds, SMALL_FOREST, None)


def test_rfe_attaches_partial_trace():
    ds, split = _planted(0, n_noise=1)
    bad = LearnerSpec("gbt", {"n_rounds": 0})
    with pytest.raises(ConfigError) as info:
        rfe(ds, bad, split)
    assert info.value.partial_trace.subsets == []


# -- rank comparison --------------------------------------------------------

def _res(method, scores, feats=("a", "b", "c", "d")):
    return AttributionResult(method, feats, scores)


def test_self_comparison():
    r = _res("shap", [0.4, 0.1, 0.3, 0.2])
    cmp = rank_compare([r, r])
    assert np.all(cmp.rho == 1.0)


def test_reversal():
    cmp = rank_compare([_res("x", [1.0, 2, 3, 4]), _res("y", [4.0, 3, 2, 1])])
    assert cmp.value("x", "y") == -1.0


def test_three_methods_symmetric_unit_diagonal():
    res = [_res("rfe", [1.0, 2, 3, 4]), _res("shap", [0.1, 0.5, 0.2, 0.9]),
           _res("gsa-s1", [0.3, 0.3, 0.1, 0.0])]
    cmp = rank_compare(res, label="gbt")
    assert cmp.rho.shape == (3, 3)
    assert np.array_equal(cmp.rho, cmp.rho.T)
    assert np.all(np.diag(cmp.rho) == 1.0)
    md = cmp.to_markdown()
    assert md.splitlines()[0] == "| gbt | rfe | shap | gsa-s1 |"
    table = comparison_table([cmp, cmp])
    assert len(table.splitlines()) == 2 + 6


def test_feature_order_does_not_matter():
    a = _res("a", [1.0, 2, 3, 4])
    b = AttributionResult("b", ("d", "c", "b", "a"), [4.0, 3, 2, 1])
    assert rank_compare([a, b]).value("a", "b") == 1.0


def test_mismatch_names_features():
    with pytest.raises(FeatureMismatchError) as info:
        rank_compare([_res("a", [1.0, 2, 3, 4]), _res("b", [1.0, 2, 3], ("a", "b", "z"))])
    assert set(info.value.offending) == {"c", "d", "z"}
    assert "missing ['c', 'd']" in str(info.value)


def test_constant_scores_are_marked():
    cmp = rank_compare([_res("a", [0.0, 0, 0, 0]), _res("b", [1.0, 2, 3, 4])])
    assert cmp.value("a", "b") is None and cmp.value("a", "a") == 1.0
    assert cmp.to_dict()["rho"][0][1] is None


def test_csv_round_trip(tmp_path):
    r = _res("shap", [0.1 + 0.2, 1 / 3, 2.0, 0.0])
    r.to_csv(tmp_path / "r.csv")
    back, = load_results([tmp_path / "r.csv"])
    assert back.method == "shap" and back.features == r.features
    assert np.array_equal(back.scores, r.scores)
