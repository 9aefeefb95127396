import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adaptive_eit.errors import ConfigError
from adaptive_eit.estimators import IndicatorTable
from adaptive_eit.marking import dorfler_mark, mark_all


def min_cover_size(values, theta):
    """Smallest cardinality of any subset reaching the theta fraction, by search."""
    total = sum(values)
    for k in range(len(values) + 1):
        for sub in itertools.combinations(range(len(values)), k):
            if sum(values[i] for i in sub) >= theta * total * (1 - 1e-12):
                return k
    return len(values)


def test_example_table():
    assert dorfler_mark([4, 3, 2, 1], 0.7) == {0, 1}


def test_theta_one_and_single_element():
    assert dorfler_mark([0.5, 0.0, 2.0, 1.0], 1.0) == {0, 2, 3}
    assert dorfler_mark([3.0], 0.7) == {0}
    assert dorfler_mark([0.0, 0.0], 0.5) == set()


@pytest.mark.parametrize("theta", [0.0, -0.1, 1.5, float("nan")])
def test_invalid_theta(theta):
    with pytest.raises(ConfigError):
        dorfler_mark([1.0, 2.0], theta)


def test_ties_broken_by_id():
    assert dorfler_mark([1.0, 2.0, 2.0, 2.0], 0.5) == {1, 2}
    assert dorfler_mark([2.0, 2.0, 2.0, 2.0], 0.25) == {0}


def test_exhaustive_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 11))
        vals = rng.exponential(size=n) * (rng.random(n) < 0.8)
        if vals.sum() == 0:
            continue
        theta = float(rng.uniform(0.05, 1.0))
        M = dorfler_mark(vals, theta)
        assert vals[sorted(M)].sum() >= theta * vals.sum() * (1 - 1e-12)
        assert len(M) == min_cover_size(list(vals), theta)
        assert int(np.argmax(vals)) in M


def test_separate_marking():
    eta1 = np.full(50, 1e-3)
    eta1[7] = 10.0
    eta2 = np.full(50, 1e-6)
    eta3 = np.zeros(50)
    res = mark_all(IndicatorTable(eta1, eta2, eta3, 2.0), 0.7)
    assert res.M1 == {7}
    assert len(res.M2) == 35
    assert res.M3 == frozenset()
    assert res.M == res.M1 | res.M2
    same = mark_all(IndicatorTable(eta1, eta1, eta1, 2.0), 0.7)
    assert same.M1 == same.M2 == same.M3


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=12),
       st.floats(0.01, 1.0))
def test_marking_properties(vals, theta):
    vals = np.array(vals)
    M = dorfler_mark(vals, theta)
    assert M == dorfler_mark(vals, theta)
    if vals.sum() == 0:
        assert M == set()
        return
    assert int(np.argmax(vals)) in M
    chosen = sorted(M)
    assert vals[chosen].sum() >= theta * vals.sum() * (1 - 1e-12)
    # minimality: dropping the smallest chosen value loses the theta fraction
    smallest = min(chosen, key=lambda i: (vals[i], -i))
    rest = [i for i in chosen if i != smallest]
    assert vals[rest].sum() < theta * vals.sum() or vals[smallest] == 0
