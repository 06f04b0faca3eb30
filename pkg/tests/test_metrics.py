import itertools

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from salix.errors import DataError
from salix.metrics import average_ranks, evaluate, spearman

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_perfect_fit():
    r = evaluate([1.0, 2, 3], [1.0, 2, 3])
    assert (r.mae, r.rmse, r.r2) == (0.0, 0.0, 1.0)


def test_mean_predictor():
    y = np.array([1.0, 4, 7, 10])
    assert evaluate(y, np.full(4, y.mean())).r2 == 0.0


def test_hand_arithmetic():
    r = evaluate([0.0, 2.0], [1.0, 1.0])
    assert (r.mae, r.rmse, r.r2) == (1.0, 1.0, 0.0)


def test_weighted_mean_predictor(rng):
    y = rng.standard_normal(40)
    w = rng.uniform(0.1, 3, 40)
    r = evaluate(y, np.full(40, w @ y / w.sum()), w)
    assert abs(r.r2) <= 1e-12 and r.weighted


def test_constant_target_r2_is_marker():
    assert evaluate([2.0, 2.0], [1.0, 3.0]).r2 is None


def test_evaluate_length_mismatch():
    with pytest.raises(DataError):
        evaluate([1.0, 2.0], [1.0])


def test_spearman_examples():
    assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert spearman([1, 2, 3, 4, 5], [1, 3, 2, 5, 4]) == pytest.approx(0.8, abs=1e-12)


def test_spearman_all_permutations_n5():
    base = np.arange(1, 6)
    perms = list(itertools.permutations(range(1, 6)))
    assert len(perms) == 120
    for perm in perms:
        d = base - np.array(perm)
        closed = 1 - 6 * np.sum(d ** 2) / (5 * (25 - 1))
        assert abs(spearman(base, perm) - closed) <= 1e-12


def test_spearman_ties_average_ranks():
    assert average_ranks([10, 20, 20, 30]).tolist() == [1.0, 2.5, 2.5, 4.0]
    # two tied zeros: Pearson on average ranks
    a, b = [0.0, 0.0, 1.0, 2.0], [1.0, 2.0, 3.0, 4.0]
    ra, rb = average_ranks(a), average_ranks(b)
    assert spearman(a, b) == pytest.approx(np.corrcoef(ra, rb)[0, 1], abs=1e-12)


def test_spearman_constant_is_marker():
    assert spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) is None


def test_spearman_bad_lengths():
    with pytest.raises(DataError):
        spearman([1.0], [1.0])
    with pytest.raises(DataError):
        spearman([1.0, 2.0], [1.0, 2.0, 3.0])


@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=30))
def test_spearman_symmetric(pairs):
    a, b = map(np.array, zip(*pairs))
    s = spearman(a, b)
    assert s == spearman(b, a)
    if np.ptp(a) > 0:
        assert spearman(a, a) == pytest.approx(1.0, abs=1e-12)


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=3, max_size=30))
def test_spearman_monotone_invariance(pairs):
    a, b = map(np.array, zip(*pairs))
    assume(np.ptp(a) > 0 and np.ptp(b) > 0)
    # exp and cube are strictly increasing on this range without collapsing distinct floats
    ta = np.exp(a / 10.0)
    assume(len(set(ta)) == len(set(a)) and len(set(b ** 3)) == len(set(b)))
    s = spearman(a, b)
    assert spearman(ta, b ** 3) == pytest.approx(s, abs=1e-12)
    assert spearman(-a, b) == pytest.approx(-s, abs=1e-12)
