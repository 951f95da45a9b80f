import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multpart.catalog import make
from multpart.ensemble import (Ensemble, PartSet, Regime, WeightSequence,
                               check_condition_10, check_condition_11,
                               classify_regime, constant_weights,
                               explicit_weights, indicator_weights,
                               monomial_weights, power_law_weights,
                               resonant_mask)
from multpart.errors import DomainError, ParamError, RegimeError
from multpart.series import CustomSeries, ExponentialSeries, GeometricSeries, Singularity

from oracles import central_diff, direct_mean_var


# -- part sets ---------------------------------------------------------------


def test_part_set_forms():
    evens = PartSet.from_spec("evens")
    odds = PartSet.from_spec("odds")
    assert [k for k in range(1, 8) if k in evens] == [2, 4, 6]
    assert [k for k in range(1, 8) if k in odds] == [1, 3, 5, 7]
    mod = PartSet.from_spec({"modulus": 3, "residues": [1]})
    assert [k for k in range(1, 10) if k in mod] == [1, 4, 7]
    pred = PartSet.from_spec(lambda k: k % 5 == 0)
    assert 10 in pred and 11 not in pred
    finite = PartSet.from_spec([1, 4, 9])
    assert finite.finite and 9 in finite and 2 not in finite


def test_part_set_density():
    assert PartSet.from_spec("evens").estimated_density() == pytest.approx(0.5)
    assert PartSet.from_spec({"modulus": 4, "residues": [1, 3]}
                             ).estimated_density() == pytest.approx(0.5)
    # predicate sets fall back to counting a long prefix
    pred = PartSet.from_spec(lambda k: k % 5 == 0)
    assert pred.estimated_density() == pytest.approx(0.2, abs=1e-3)


# -- weight sequences --------------------------------------------------------


def test_prefix_sum_examples():
    assert constant_weights().prefix_sum(10) == 10
    assert power_law_weights(1, 2).prefix_sum(4) == 16
    assert indicator_weights("evens").prefix_sum(7) == 3


def test_power_law_prefix_exact_for_fractional_beta():
    w = power_law_weights(2.0, 1.5)
    for k in (1, 7, 100):
        assert w.prefix_sum(k) == pytest.approx(2.0 * k ** 1.5, rel=1e-14)


def test_weight_values():
    w = power_law_weights(1, 2)
    assert [w.value(k) for k in (1, 2, 3)] == [1, 3, 5]
    m = monomial_weights(2, 1)
    assert [m.value(k) for k in (1, 2, 3)] == [2, 4, 6]
    ex = explicit_weights([1, 0, 2])
    assert [ex.value(k) for k in (1, 2, 3, 4)] == [1, 0, 2, 0]
    assert ex.finite_support and ex.support_end == 3


def test_weight_validation():
    with pytest.raises(ParamError):
        WeightSequence("mystery")
    with pytest.raises(ParamError):
        power_law_weights(0, 1)
    with pytest.raises(ParamError):
        explicit_weights([])
    with pytest.raises(ParamError):
        explicit_weights([1, -2])
    with pytest.raises(ParamError):
        WeightSequence("constant", declared_chi=1.5)


def test_declared_fields_stored():
    w = explicit_weights([1.5, 1.0, 0.5], declared_beta=1.0,
                         declared_theta=1.0, declared_zeta=0.8,
                         declared_chi=0.51)
    assert (w.declared_zeta, w.declared_chi) == (0.8, 0.51)
    assert w.beta == 1.0 and w.theta == 1.0


def test_scaled_weights():
    w = power_law_weights(1, 2).scaled(0.5)
    assert w.value(2) == pytest.approx(1.5)
    assert w.prefix_sum(4) == pytest.approx(8.0)


# -- moments -----------------------------------------------------------------


def uniform() -> Ensemble:
    return Ensemble(GeometricSeries(1), constant_weights(), label="uniform")


def test_mean_trivials():
    e = uniform()
    assert e.mean_N(0.0) == 0.0
    assert e.var_N(0.0) == 0.0


def test_mean_against_direct_sum():
    e = uniform()
    got = e.mean_N(0.5)
    # sum k 0.5^k / (1 - 0.5^k), summed far past the tolerance
    want = sum(k * 0.5 ** k / (1 - 0.5 ** k) for k in range(1, 200))
    assert got == pytest.approx(want, rel=1e-12)
    assert got == pytest.approx(2.744, abs=5e-4)


def test_mean_against_coefficient_route():
    from multpart.partition_function import coefficients

    e = uniform()
    x = 0.9
    table = coefficients(e, 2000, mode="exact")
    num = sum(n * int(table.coefficient(n)) * x ** n for n in range(2001))
    den = sum(int(table.coefficient(n)) * x ** n for n in range(2001))
    assert e.mean_N(x) == pytest.approx(num / den, rel=1e-8)


def test_var_matches_finite_difference():
    e = uniform()
    got = e.var_N(0.5)
    want = 0.5 * central_diff(e.mean_N, 0.5, 1e-6)
    assert got == pytest.approx(want, rel=1e-5)


def test_var_exponential_constant_closed_form():
    # sum k^2 q^k = q(1+q)/(1-q)^3 = 6.0 at q = 1/2
    e = Ensemble(ExponentialSeries(1), constant_weights())
    assert e.var_N(0.5) == pytest.approx(6.0, rel=1e-12)
    mean, var = direct_mean_var(lambda k: 1, lambda u: (1.0, 0.0), 0.5, 200)
    assert e.mean_N(0.5) == pytest.approx(mean, rel=1e-12)
    assert e.var_N(0.5) == pytest.approx(var, rel=1e-12)


def test_moments_against_oracle_weighted():
    y = 0.5
    e = make("weighted", y=y)

    def ratio(u):
        d = 1 - y * u
        return y / d, (y / d) ** 2

    mean, var = direct_mean_var(lambda k: 1, ratio, 0.8, 400)
    assert e.mean_N(0.8) == pytest.approx(mean, rel=1e-11)
    assert e.var_N(0.8) == pytest.approx(var, rel=1e-11)


def test_domain_checks():
    e = uniform()
    with pytest.raises(DomainError):
        e.mean_N(1.0)
    with pytest.raises(DomainError):
        e.mean_N(-0.2)
    w2 = make("weighted", y=2)
    with pytest.raises(DomainError):
        w2.mean_N(0.5)  # rho = 1/2 itself is outside


@given(st.floats(0.05, 0.93))
@settings(max_examples=30, deadline=None)
def test_mean_strictly_increasing(x):
    e = uniform()
    assert e.mean_N(x + 0.05) > e.mean_N(x)


def test_var_increasing_on_grid():
    e = uniform()
    xs = np.linspace(0.05, 0.95, 19)
    vals = [e.var_N(float(x)) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


# -- normalization -----------------------------------------------------------


def test_normalized_preserves_moments():
    e = Ensemble(ExponentialSeries(1), monomial_weights(2, 0.5))
    ne = e.normalized()
    assert ne.weights.b_1 == pytest.approx(1.0)
    for x in (0.2, 0.5, 0.8):
        assert ne.mean_N(x) == pytest.approx(e.mean_N(x), rel=1e-12)
        assert ne.var_N(x) == pytest.approx(e.var_N(x), rel=1e-12)


def test_normalized_noop_and_failure():
    e = uniform()
    assert e.normalized() is e
    evens = Ensemble(GeometricSeries(1), indicator_weights("evens"))
    with pytest.raises(RegimeError):
        evens.normalized()


# -- regimes -----------------------------------------------------------------


@pytest.mark.parametrize("build,expect", [
    (lambda: make("weighted", y=0.5), Regime.ERGODIC_SUPERCRITICAL),
    (lambda: make("uniform"), Regime.ERGODIC_POLE_AT_ONE),
    (lambda: make("weighted", y=2), Regime.NONERGODIC_GRAND_CANONICAL),
    (lambda: make("gibbs", theta=1, beta=2), Regime.ERGODIC_SUPERCRITICAL),
    (lambda: make("restricted", parts="odds"), Regime.ERGODIC_POLE_AT_ONE),
    (lambda: make("restricted", parts="evens"), Regime.OUT_OF_SCOPE),
    (lambda: make("ewens", theta=1), Regime.OUT_OF_SCOPE),
    (lambda: Ensemble(GeometricSeries(1), explicit_weights([1, 1])),
     Regime.OUT_OF_SCOPE),
    (lambda: Ensemble(CustomSeries(lambda j: 1 / math.factorial(j) ** 0.5,
                                   radius=0.5,
                                   singularity=Singularity("essential")),
                      constant_weights()),
     Regime.ESSENTIAL_SUBCRITICAL),
])
def test_regime_classification(build, expect):
    e = build()
    assert classify_regime(e) is expect
    assert e.regime is expect


def test_regime_strings():
    assert str(Regime.NONERGODIC_GRAND_CANONICAL) == "NonergodicGrandCanonical"
    assert Regime.ERGODIC_POLE_AT_ONE.ergodic
    assert not Regime.OUT_OF_SCOPE.ergodic


# -- resonance diagnostics ---------------------------------------------------


def test_resonant_mask_s3():
    ks = np.arange(1, 13)
    hits = ks[resonant_mask(3.0, ks)]
    assert hits.tolist() == [3, 6, 9, 12]


def test_condition_10_constant():
    rep = check_condition_10(constant_weights(), k_max=10_000)
    assert rep.worst_ratio <= 0.51
    assert rep.per_s[2.0]["worst_ratio"] == pytest.approx(0.5, abs=0.01)
    assert rep.satisfied(0.51)


def test_condition_10_evens_lattice():
    rep = check_condition_10(indicator_weights("evens"), k_max=2000)
    assert rep.worst_s == 2.0
    assert rep.per_s[2.0]["worst_ratio"] == pytest.approx(1.0)
    assert not rep.satisfied(0.99)
    with pytest.raises(ParamError):
        rep.satisfied(1.0)


def test_condition_11_power_law_exact():
    rep = check_condition_11(power_law_weights(1, 1))
    assert rep.exact_compliance
    assert rep.remainder_exponent is None
    assert not rep.out_of_scope
    assert rep.compatible(zeta=5.0)


def test_condition_11_alternating_explicit():
    # b_k = 1 + (-1)^k / 2 gives B_k = k + O(1): compliant for zeta < 1
    values = [1 + (-1) ** k / 2 for k in range(1, 5001)]
    w = explicit_weights(values, declared_beta=1.0, declared_theta=1.0)
    rep = check_condition_11(w)
    assert not rep.exact_compliance
    assert rep.remainder_exponent is not None
    assert rep.remainder_exponent < 0.2
    assert rep.compatible(zeta=0.9)
    assert not rep.out_of_scope


def test_condition_11_bounded_prefix_out_of_scope():
    # B_k = sum 1/j^2 is bounded: no positive beta fits its growth
    values = [1.0 / k ** 2 for k in range(1, 5001)]
    w = explicit_weights(values)
    rep = check_condition_11(w)
    assert rep.out_of_scope
