import json
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from salix.attribution import gsa_over_model, sobol_design, sobol_indices
from salix.attribution.sobol import sobol_points
from salix.errors import DataError
from salix.synth import gen_ishigami, ishigami_indices

from conftest import FIXTURES

UNIT2 = [[0.0, 1.0], [0.0, 1.0]]


def test_design_shapes_and_bounds():
    bounds = [[-1.0, 1.0], [10.0, 20.0]]
    d = sobol_design(bounds, 8)
    assert d.A.shape == d.B.shape == (8, 2) and d.AB.shape == (2, 8, 2)
    assert d.stacked().shape == (32, 2) and d.n_rows == 32
    rows = d.stacked()
    assert np.all(rows >= np.array(bounds)[:, 0]) and np.all(rows <= np.array(bounds)[:, 1])
    for i in range(2):
        other = 1 - i
        assert np.array_equal(d.AB[i][:, i], d.B[:, i])
        assert np.array_equal(d.AB[i][:, other], d.A[:, other])


def test_first_point_is_midpoint():
    assert np.all(sobol_points(4, 6)[0] == 0.5)
    d = sobol_design([[2.0, 4.0], [-3.0, 1.0]], 4)
    assert d.A[0].tolist() == [3.0, -1.0] and d.B[0].tolist() == [3.0, -1.0]


@pytest.mark.parametrize("seed", [None, 11])
def test_design_deterministic(seed):
    a = sobol_design(UNIT2, 16, seed)
    b = sobol_design(UNIT2, 16, seed)
    assert np.array_equal(a.stacked(), b.stacked())


def test_scrambled_differs_from_plain():
    assert not np.array_equal(sobol_design(UNIT2, 16, 3).A, sobol_design(UNIT2, 16).A)


@pytest.mark.parametrize("bounds", [[[1.0, 1.0]], [[2.0, 1.0]]])
def test_degenerate_bounds(bounds):
    with pytest.raises(DataError):
        sobol_design(bounds, 8)


@pytest.mark.parametrize("n", [0, 1, 6, 1000])
def test_n_base_power_of_two(n):
    with pytest.raises(DataError):
        sobol_design(UNIT2, n)


def test_constant_model_flagged():
    d = sobol_design(UNIT2, 64)
    ind = sobol_indices(lambda X: np.full(X.shape[0], 3.0), d)
    assert ind.constant
    assert np.all(ind.s1 == 0) and np.all(ind.st == 0)


def test_additive_halves():
    d = sobol_design(UNIT2, 2 ** 12)
    ind = sobol_indices(lambda X: X[:, 0] + X[:, 1], d, n_bootstrap=50)
    assert np.allclose(ind.s1, 0.5, atol=0.02)
    assert np.allclose(ind.st, ind.s1, atol=0.03)


def test_inactive_input():
    d = sobol_design([[-1.0, 1.0]] * 3, 2 ** 12)
    ind = sobol_indices(lambda X: np.exp(X[:, 0]) * X[:, 1], d, n_bootstrap=20)
    assert ind.st[2] <= 0.02
    assert ind.s1.sum() <= 1.05


def test_one_feature_model():
    d = sobol_design([[0.0, 2.0]], 2 ** 12)
    ind = sobol_indices(lambda X: X[:, 0] ** 3, d, n_bootstrap=20)
    assert ind.s1[0] == pytest.approx(1.0, abs=0.02)
    assert ind.st[0] == pytest.approx(1.0, abs=0.02)


@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_ci_contains_point(seed, p):
    r = np.random.default_rng(seed)
    coef = r.standard_normal(p)
    d = sobol_design([[0.0, 1.0]] * p, 64, seed=seed)
    ind = sobol_indices(lambda X: np.sin(X @ coef * 3), d, n_bootstrap=30, seed=seed)
    if not ind.constant:
        assert np.all(ind.s1_ci[:, 0] <= ind.s1) and np.all(ind.s1 <= ind.s1_ci[:, 1])
        assert np.all(ind.st_ci[:, 0] <= ind.st) and np.all(ind.st <= ind.st_ci[:, 1])


def test_ishigami_estimates():
    prob = gen_ishigami()
    d = sobol_design(prob.bounds, 2 ** 14)
    ind = sobol_indices(prob, d, n_bootstrap=20)
    assert np.allclose(ind.s1, prob.s1, atol=0.03)
    assert np.allclose(ind.st, prob.st, atol=0.05)
    assert ind.features == ("x1", "x2", "x3")


def test_ishigami_analytic_record():
    prob = gen_ishigami()
    assert prob(np.zeros((1, 3)))[0] == 0.0
    assert prob.st[1] == prob.s1[1]
    assert np.allclose(prob.s1, (0.3139, 0.4424, 0.0), atol=5e-5)
    assert np.allclose(prob.st, (0.5576, 0.4424, 0.2437), atol=5e-5)


def test_ishigami_matches_monte_carlo_fixture():
    with open(os.path.join(FIXTURES, "ishigami_mc.json")) as fh:
        mc = json.load(fh)
    ref = ishigami_indices(mc["a"], mc["b"])
    assert mc["n"] == 10 ** 6
    assert np.allclose(mc["s1"], ref["S1"], atol=0.01)
    assert np.allclose(mc["st"], ref["ST"], atol=0.01)


def test_gsa_over_model_metadata_and_exports(tmp_path):
    from salix.models import fit_linear
    r = np.random.default_rng(0)
    X = r.uniform(0, 1, (200, 3))
    m = fit_linear(X, 2 * X[:, 0] + X[:, 1], feature_names=["a", "b", "c"])
    s1, stt, ind = gsa_over_model(m, X, n_base=1024, n_bootstrap=20)
    assert s1.method == "gsa-s1" and stt.method == "gsa-st"
    assert "independent" in s1.metadata["assumption"]
    assert s1.metadata["evals"] == 1024 * 5
    assert s1.top(1) == ["a"]
    ind.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "feature,s1,s1_lo,s1_hi,st,st_lo,st_hi" and len(lines) == 4
    _, _, emp = gsa_over_model(m, X, n_base=1024, sampler="empirical", n_bootstrap=0)
    assert emp.metadata["sampler"] == "empirical"
