import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exact_cvar, quantile_integral_cvar
from riskbandit.risk import (RiskMeasure, bernoulli_cvar, bernoulli_mv, binary_risk,
                             empirical_cvar, empirical_mv, lipschitz_constant,
                             weighted_empirical_cvar)

samples = st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=40)
alphas = st.floats(0.01, 1.0)


@given(samples, alphas)
def test_cvar_matches_quantile_integral(xs, alpha):
    assert empirical_cvar(xs, alpha) == pytest.approx(quantile_integral_cvar(xs, alpha),
                                                      abs=1e-12)


@given(samples, alphas)
def test_cvar_between_mean_and_max(xs, alpha):
    v = empirical_cvar(xs, alpha)
    assert np.mean(xs) - 1e-12 <= v <= max(xs) + 1e-12


@given(st.lists(st.integers(0, 5), min_size=1, max_size=30),
       st.sampled_from([0.1, 0.25, 0.3, 0.45, 0.5, 0.7, 1.0]))
def test_cvar_exact_on_integers(xs, alpha):
    assert empirical_cvar(xs, alpha) == pytest.approx(float(exact_cvar(xs, alpha)), rel=1e-12)


@given(samples, alphas, st.floats(0.1, 10))
def test_weighted_reduces_to_unweighted(xs, alpha, c):
    w = [c] * len(xs)
    assert weighted_empirical_cvar(xs, w, alpha) == pytest.approx(empirical_cvar(xs, alpha),
                                                                  abs=1e-12)


@settings(max_examples=60)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0.01, 5)), min_size=1, max_size=20),
       alphas)
def test_weighted_matches_oracle(pairs, alpha):
    xs, ws = zip(*pairs)
    assert weighted_empirical_cvar(xs, ws, alpha) == pytest.approx(
        quantile_integral_cvar(xs, alpha, ws), abs=1e-10)


def test_cvar_alpha_one_is_mean():
    xs = [0.1, 0.4, 0.9]
    assert empirical_cvar(xs, 1.0) == pytest.approx(np.mean(xs))


def test_cvar_top_order_statistics():
    xs = [0, 1, 0, 1, 1, 0, 0, 0, 0, 0]
    assert empirical_cvar(xs, 0.3) == pytest.approx(1.0)
    assert empirical_cvar(xs, 0.5) == pytest.approx(0.6)
    # fractional share of the boundary order statistic
    assert empirical_cvar([3, 2, 1], 0.5) == pytest.approx((3 + 0.5 * 2) / 1.5)


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5, math.nan])
def test_cvar_rejects_bad_alpha(bad):
    with pytest.raises(ValueError):
        empirical_cvar([0.5], bad)


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        empirical_cvar([], 0.5)
    with pytest.raises(ValueError):
        empirical_mv([], 1.0)


def test_weights_validated():
    with pytest.raises(ValueError):
        weighted_empirical_cvar([0.1, 0.2], [1.0], 0.5)
    with pytest.raises(ValueError):
        weighted_empirical_cvar([0.1, 0.2], [1.0, -1.0], 0.5)


def test_mv_population_variance():
    xs = [0.0, 1.0, 1.0, 0.0]
    assert empirical_mv(xs, 2.0) == pytest.approx(0.5 + 2 * 0.25)
    assert empirical_mv(xs, 0.0) == pytest.approx(0.5)
    assert empirical_mv(xs, 1.0, weights=[1, 1, 1, 1]) == pytest.approx(0.75)


@given(st.floats(0, 1), st.floats(0.01, 1))
def test_bernoulli_cvar_closed_form(p, alpha):
    assert bernoulli_cvar(p, alpha) == pytest.approx(min(1.0, p / alpha))


def test_bernoulli_closed_forms_match_large_samples():
    n = 1000
    for ones in (0, 130, 450, 1000):
        xs = np.r_[np.ones(ones), np.zeros(n - ones)]
        assert bernoulli_cvar(ones / n, 0.45) == pytest.approx(empirical_cvar(xs, 0.45))
        assert bernoulli_mv(ones / n, 1.5) == pytest.approx(empirical_mv(xs, 1.5))


@given(st.integers(0, 50), st.integers(1, 50), st.sampled_from(["cvar", "mv"]))
def test_binary_risk_matches_expanded_sample(ones, extra, kind):
    n = ones + extra
    m = RiskMeasure(kind, 0.3 if kind == "cvar" else 2.0)
    xs = np.r_[np.ones(ones), np.zeros(n - ones)]
    assert binary_risk(ones, n, m) == pytest.approx(m.empirical(xs), abs=1e-12)


def test_lipschitz_constants():
    assert lipschitz_constant(RiskMeasure.cvar(0.45)) == pytest.approx(1 / 0.45)
    assert RiskMeasure.mean_variance(0.5).lipschitz == pytest.approx(3.0)


def test_measure_validation():
    with pytest.raises(ValueError):
        RiskMeasure("var", 0.5)
    with pytest.raises(ValueError):
        RiskMeasure.cvar(0.0)
    with pytest.raises(ValueError):
        RiskMeasure.mean_variance(-1.0)
    assert str(RiskMeasure.cvar(0.45)) == "CVaR(0.45)"
