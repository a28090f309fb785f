import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nfis.fuzzy_core import (
    AntecedentRule, GaussianSet, estimate_antecedent, firing_degrees, membership, sigma_floor,
)


def test_membership_at_mean():
    assert membership(3.0, GaussianSet(3.0, 2.0)) == 1.0


def test_membership_one_std_away():
    assert membership(1.5, GaussianSet(1.0, 0.5)) == pytest.approx(0.6065306597126334, rel=1e-12)


def test_membership_symmetry():
    s = GaussianSet(1.0, 0.5)
    assert membership(1.5, s) == membership(0.5, s)


def test_gaussian_set_rejects_nonpositive_std():
    with pytest.raises(ValueError):
        GaussianSet(0.0, 0.0)


@given(st.floats(-50, 50), st.floats(0, 10), st.floats(0, 10), st.floats(0.1, 5))
def test_membership_decreases_with_distance(v, d1, d2, sigma):
    s = GaussianSet(v, sigma)
    near, far = sorted([d1, d2])
    assert membership(v + near, s) >= membership(v + far, s)


def test_single_rule_fires_fully():
    rule = AntecedentRule([0.0, 1.0], [1.0, 1.0])
    np.testing.assert_array_equal(firing_degrees([100.0, -3.0], [rule]), [1.0])


def test_equidistant_rules_split_evenly():
    rules = [AntecedentRule([0.0], [1.0]), AntecedentRule([2.0], [1.0])]
    np.testing.assert_allclose(firing_degrees([1.0], rules), [0.5, 0.5], rtol=1e-12)


def test_two_rules_hand_values():
    rules = [AntecedentRule([0.0], [1.0]), AntecedentRule([2.0], [1.0])]
    raw = np.array([1.0, math.exp(-2.0)])
    np.testing.assert_allclose(firing_degrees([0.0], rules), raw / raw.sum(), rtol=1e-12)
    np.testing.assert_allclose(firing_degrees([0.0], rules), [0.880797, 0.119203], atol=5e-7)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        firing_degrees([1.0, 2.0], [AntecedentRule([0.0], [1.0])])


def test_far_query_does_not_underflow():
    rules = [AntecedentRule([0.0], [1e-3]), AntecedentRule([1.0], [1e-3])]
    w = firing_degrees([1e6], rules)
    assert np.isfinite(w).all()
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(w, [0.0, 1.0], atol=1e-300)


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, (4, 3), elements=st.floats(-10, 10)),
    arrays(np.float64, (4, 3), elements=st.floats(0.05, 5)),
    arrays(np.float64, 3, elements=st.floats(-20, 20)),
)
def test_firing_sums_to_one(means, stds, x):
    rules = [AntecedentRule(m, s) for m, s in zip(means, stds)]
    w = firing_degrees(x, rules)
    assert abs(w.sum() - 1.0) < 1e-12
    assert (w >= 0).all()


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float64, (3, 2), elements=st.floats(-5, 5)),
    st.floats(-5, 5), st.floats(0.1, 3), st.floats(-5, 5),
)
def test_shared_attribute_does_not_change_weights(means, v, sigma, extra):
    # Appending the same set to every rule scales all raw products by one constant.
    stds = np.ones_like(means)
    x = np.array([0.3, -0.7])
    base = [AntecedentRule(m, s) for m, s in zip(means, stds)]
    padded = [AntecedentRule(np.append(m, v), np.append(s, sigma)) for m, s in zip(means, stds)]
    np.testing.assert_allclose(firing_degrees(np.append(x, extra), padded), firing_degrees(x, base), rtol=1e-9)


def test_sigma_floor():
    np.testing.assert_allclose(sigma_floor([10.0, 0.0]), [1e-5, 1e-12])


def test_estimate_antecedent_single_sample_uses_floor():
    rule = estimate_antecedent(np.array([[2.0, 5.0]]), sigma_floor([4.0, 0.0]))
    np.testing.assert_array_equal(rule.means, [2.0, 5.0])
    np.testing.assert_allclose(rule.stds, [4e-6, 1e-12])


def test_estimate_antecedent_population_std():
    rule = estimate_antecedent(np.array([[1.0], [3.0]]), sigma_floor([2.0]))
    np.testing.assert_array_equal(rule.stds, [1.0])


def test_rule_sets_round_trip():
    sets = [GaussianSet(1.0, 2.0), GaussianSet(-1.0, 0.5)]
    assert AntecedentRule.from_sets(sets).sets == sets
