from fractions import Fraction

import numpy as np
import pytest

from latentbn.catalog import get_model
from latentbn.distribution import DistributionTensor, observable_distribution
from latentbn.errors import IdentificationError
from latentbn.model import ParameterSet, sample_generic_parameters
from latentbn.orbits import parameter_distance
from latentbn.recovery import (
    kruskal_preconditions,
    kruskal_recover,
    odds_ratio_condition,
    recover_43b,
)
from latentbn.scalar import RATIONAL, as_array


def exact_match(candidates, theta):
    return any(all(np.array_equal(c[v], theta[v]) for v in theta.cpts) for c in candidates)


@pytest.mark.parametrize("seed", range(5))
def test_kruskal_exact(seed):
    m = get_model("3-0")
    theta = sample_generic_parameters(m, seed, mode=RATIONAL)
    res = kruskal_recover(observable_distribution(m, theta), 2)
    assert res.mode == RATIONAL and res.k == 2 and res.ok
    assert exact_match(res.candidates, theta)


def test_kruskal_three_hidden_states():
    m = get_model("3-0", n=3, hidden_states=3)
    theta = sample_generic_parameters(m, 2)
    res = kruskal_recover(observable_distribution(m, theta), 3)
    assert res.k == 6
    assert min(parameter_distance(c, theta) for c in res.candidates) < 1e-9


def test_kruskal_larger_x3_and_subarray():
    m = get_model("3-0", n=3, hidden_states=2)
    theta = sample_generic_parameters(m, 5, mode=RATIONAL)
    res = kruskal_recover(observable_distribution(m, theta), 2)
    assert res.k == 2 and exact_match(res.candidates, theta)


def test_kruskal_preconditions_report():
    m = get_model("3-0")
    theta = sample_generic_parameters(m, 0)
    assert all(c.passed for c in kruskal_preconditions(m, theta).values())
    cpts = dict(theta.cpts)
    cpts[1] = np.array([[0.3, 0.7], [0.3, 0.7]])
    report = kruskal_preconditions(m, ParameterSet(cpts))
    assert not report["M1 rank"].passed


def test_kruskal_singular_m1_flagged():
    m = get_model("3-0")
    theta = sample_generic_parameters(m, 0, mode=RATIONAL)
    cpts = dict(theta.cpts)
    cpts[1] = as_array([["1/3", "2/3"], ["1/3", "2/3"]], RATIONAL)
    with pytest.raises(IdentificationError) as info:
        kruskal_recover(observable_distribution(m, ParameterSet(cpts)), 2)
    assert "singular" in info.value.check


def test_kruskal_equal_m3_rows_flagged():
    m = get_model("3-0")
    theta = sample_generic_parameters(m, 0, mode=RATIONAL)
    cpts = dict(theta.cpts)
    cpts[3] = as_array([["1/4", "3/4"], ["1/4", "3/4"]], RATIONAL)
    with pytest.raises(IdentificationError):
        kruskal_recover(observable_distribution(m, ParameterSet(cpts)), 2)


def test_odds_ratio_condition():
    half = Fraction(1, 2)
    same = as_array([[half, half]] * 4, RATIONAL)
    assert not odds_ratio_condition(same, 1, 2, n0=2)
    distinct = as_array([["1/5", "4/5"], ["1/2", "1/2"], ["2/3", "1/3"], ["1/10", "9/10"]], RATIONAL)
    assert odds_ratio_condition(distinct, 1, 2, n0=2)


@pytest.mark.parametrize("seed", range(5))
def test_recover_43b_exact(seed):
    m = get_model("4-3b")
    theta = sample_generic_parameters(m, seed, mode=RATIONAL)
    res = recover_43b(observable_distribution(m, theta), 2)
    assert res.k == 2 and exact_match(res.candidates, theta)
    assert res.preconditions["odds-ratio condition"].passed


def test_recover_43b_odds_ratio_failure():
    m = get_model("4-3b")
    theta = sample_generic_parameters(m, 0, mode=RATIONAL)
    cpts = dict(theta.cpts)
    # P(X3 | X0, X1) constant in X0 makes every odds ratio equal across hidden states
    cpts[3] = as_array([["1/3", "2/3"], ["3/4", "1/4"], ["1/3", "2/3"], ["3/4", "1/4"]], RATIONAL)
    with pytest.raises(IdentificationError):
        recover_43b(observable_distribution(m, ParameterSet(cpts)), 2)


def test_wrong_shape_rejected():
    t = DistributionTensor((1, 2), np.full((2, 2), 0.25))
    with pytest.raises(IdentificationError, match="model shape"):
        kruskal_recover(t, 2)
    with pytest.raises(IdentificationError, match="model shape"):
        recover_43b(t, 2)
