"""Quadrature constants, limit shapes, and the tilt solver."""

import math

import pytest

from multpart import (
    CustomSeries,
    DomainError,
    Ensemble,
    ParamError,
    RegimeError,
    Singularity,
    constant_weights,
    limit_shape,
    make,
    omega,
    phi_at_zero_divergent,
    scaling_alpha,
    shape_curve,
    sigma_sq,
    solve_tilt,
    symmetric_rescale,
)

from oracles import dilog_series


# ---------------------------------------------------------------------------
# the growth constants


def test_omega_uniform():
    assert omega(make("uniform")) == pytest.approx(math.pi ** 2 / 6, abs=1e-8)


def test_omega_weighted_half_is_dilogarithm():
    got = omega(make("weighted", y=0.5))
    assert got == pytest.approx(dilog_series(0.5), abs=1e-8)


def test_omega_odds_matches_uniform():
    # the integral never sees the indicator: only theta = density changes
    odds = make("restricted", parts="odds")
    assert omega(odds) == pytest.approx(math.pi ** 2 / 6, abs=1e-8)
    assert odds.theta == pytest.approx(0.5)


@pytest.mark.parametrize("theta,beta", [(1, 1), (1, 2), (2, 1)])
def test_omega_gibbs_closed_form(theta, beta):
    # theta is folded into the series by normalization, so it scales the
    # integral; the growth prefactor 1/beta is reported separately
    e = make("gibbs", theta=theta, beta=beta)
    assert omega(e) == pytest.approx(theta * beta * math.gamma(beta + 1),
                                     rel=1e-9)
    assert e.theta == pytest.approx(1.0 / beta)


def test_omega_memoized():
    e = make("uniform")
    assert omega(e) is omega(e) or omega(e) == omega(e)
    assert "omega" in e._memo


def test_sigma_sq_is_beta_plus_one_omega():
    u = make("uniform")
    assert sigma_sq(u) == pytest.approx(math.pi ** 2 / 3, abs=1e-6)
    g12 = make("gibbs", theta=1, beta=2)
    assert sigma_sq(g12) == pytest.approx(3 * omega(g12), rel=1e-6)
    g11 = make("gibbs", theta=1, beta=1)
    assert sigma_sq(g11) == pytest.approx(2.0, rel=1e-9)


def test_variance_growth_matches_sigma_sq():
    # var_N(x) ~ sigma^2 (1-x)^-(beta+2): beta=1 here
    e = make("ordered_lists")
    scaled = 0.001 ** 3 * e.var_N(0.999)
    assert scaled == pytest.approx(sigma_sq(e), rel=0.02)


def test_omega_consistency_ladder():
    # mean_N(1-tau) tau^(beta+1)/theta approaches Omega linearly in tau
    u = make("uniform")
    om = omega(u)
    gaps = []
    for tau, tol in ((1e-2, 2e-2), (1e-3, 2e-3), (1e-4, 2e-4)):
        val = u.mean_N(1.0 - tau) * tau ** 2
        gap = abs(val - om) / om
        assert gap < tol
        gaps.append(gap)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01


# ---------------------------------------------------------------------------
# limit shapes


def test_shape_uniform_closed_form():
    u = make("uniform")
    t = math.log(2)
    want = (6 / math.pi ** 2) * math.log(2)
    assert limit_shape(u, t) == pytest.approx(want, abs=1e-6)
    assert limit_shape(u, 1.0) == pytest.approx(
        -(6 / math.pi ** 2) * math.log1p(-math.exp(-1)), abs=1e-6)


def test_shape_weighted_closed_form():
    e = make("weighted", y=0.5)
    want = -math.log1p(-0.5 * math.exp(-1)) / dilog_series(0.5)
    assert limit_shape(e, 1.0) == pytest.approx(want, abs=1e-6)
    # value at 0 is finite: the series is supercritical
    want0 = math.log(2) / dilog_series(0.5)
    assert limit_shape(e, 0.0) == pytest.approx(want0, abs=1e-6)


def test_shape_gibbs_exponential():
    g11 = make("gibbs", theta=1, beta=1)
    for t in (0.25, 1.0, 2.0):
        assert limit_shape(g11, t) == pytest.approx(math.exp(-t), abs=1e-6)
    # finite at zero with value 1/beta
    g12 = make("gibbs", theta=1, beta=2)
    assert limit_shape(g12, 0.0) == pytest.approx(0.5, abs=1e-6)


def test_shape_divergence_at_zero():
    u = make("uniform")
    assert phi_at_zero_divergent(u)
    with pytest.raises(DomainError):
        limit_shape(u, 0.0)
    with pytest.raises(DomainError):
        limit_shape(u, -0.5)
    assert not phi_at_zero_divergent(make("weighted", y=0.5))
    assert not phi_at_zero_divergent(make("gibbs", theta=1, beta=1))


def test_shape_curve_uniform_audit():
    sc = shape_curve(make("uniform"), t_max=5.0, grid_size=200)
    assert len(sc.ts) == len(sc.phis) == 200
    assert sc.nonincreasing
    assert sc.integral_check == pytest.approx(1.0, abs=5e-3)
    assert math.isinf(sc.phi_at_zero)
    assert sc.omega == pytest.approx(math.pi ** 2 / 6, abs=1e-8)
    assert sc.beta == 1.0
    rows = list(sc.rows())
    assert len(rows) == 200
    assert all(isinstance(t, float) and isinstance(p, float) for t, p in rows)


def test_shape_curve_weighted_finite_at_zero():
    sc = shape_curve(make("weighted", y=0.5), t_max=5.0, grid_size=120)
    assert sc.nonincreasing
    assert sc.integral_check == pytest.approx(1.0, abs=5e-3)
    assert sc.phi_at_zero == pytest.approx(
        math.log(2) / dilog_series(0.5), abs=1e-6)


def test_shape_curve_rejects_bad_grid():
    u = make("uniform")
    with pytest.raises(ParamError):
        shape_curve(u, t_max=0.0)
    with pytest.raises(ParamError):
        shape_curve(u, t_max=2.0, grid_size=1)


def test_shape_matches_tilted_mean_counts():
    # tau * E_x[#parts >= t/tau] -> theta * Omega * phi(t) as tau -> 0
    for name, params in (("uniform", {}), ("gibbs", {"theta": 1, "beta": 1})):
        e = make(name, **params)
        om, th = omega(e), e.theta
        tau = 1e-3
        for t in (0.5, 1.0, 2.0):
            k0 = math.ceil(t / tau)
            got = tau * e.mean_counts_tail(1.0 - tau, k0)
            assert got == pytest.approx(th * om * limit_shape(e, t), rel=0.02)


def test_symmetric_rescale_self_duality():
    u = make("uniform")
    om = omega(u)
    tilde = symmetric_rescale(lambda t: limit_shape(u, t), om)
    c = math.pi / math.sqrt(6)
    for t in (0.3, 0.8, 1.5, 2.5):
        assert math.exp(-c * tilde(t)) + math.exp(-c * t) == pytest.approx(
            1.0, abs=1e-6)


# ---------------------------------------------------------------------------
# truncated-series ensembles


@pytest.fixture(scope="module")
def custom_geometric():
    cs = CustomSeries(lambda j: 1.0, radius=1.0,
                      singularity=Singularity("pole", 1))
    return Ensemble(cs, constant_weights(), label="custom-geom")


def test_truncated_series_omega(custom_geometric):
    assert omega(custom_geometric) == pytest.approx(math.pi ** 2 / 6,
                                                    abs=1e-9)


def test_truncated_series_grid_guard(custom_geometric):
    # evaluation is barred within 1e-3 of the singularity, so a grid whose
    # first point sits below that is refused up front
    with pytest.raises(ParamError, match="grid too fine"):
        shape_curve(custom_geometric, t_max=1.0, grid_size=2000)
    sc = shape_curve(custom_geometric, t_max=4.0, grid_size=60)
    assert sc.integral_check == pytest.approx(1.0, abs=5e-3)


# ---------------------------------------------------------------------------
# tilt solving


def test_tilt_uniform_small_n():
    sol = solve_tilt(make("uniform"), 100)
    assert 0.85 < sol.x_n < 0.90
    assert sol.residual <= 1e-10 * 100
    assert sol.mean == pytest.approx(100, abs=1e-6)
    assert sol.tau_n == pytest.approx(1.0 - sol.x_n)
    assert sol.alpha == pytest.approx(1.0 / sol.tau_n)
    assert sol.variance > 0


def test_tilt_scaling_at_large_n():
    # tau_n (n / (Omega theta))^(1/(beta+1)) -> 1
    for name, params in (("uniform", {}), ("gibbs", {"theta": 1, "beta": 1})):
        e = make(name, **params)
        sol = solve_tilt(e, 10 ** 6)
        ratio = sol.tau_n * (10 ** 6 / (omega(e) * e.theta)) ** 0.5
        assert 0.95 < ratio < 1.05


def test_tilt_memoized():
    e = make("uniform")
    assert solve_tilt(e, 500) is solve_tilt(e, 500)


def test_tilt_nonergodic_pole_gap():
    # near the finite radius the gap behaves like m rho / n
    e = make("weighted", y=2)
    sol = solve_tilt(e, 10 ** 4)
    assert (0.5 - sol.x_n) * 10 ** 4 == pytest.approx(0.5, rel=0.10)
    assert sol.residual <= 1e-10 * 10 ** 4


def test_tilt_rejects_bad_n():
    with pytest.raises(ParamError):
        solve_tilt(make("uniform"), 0)
    with pytest.raises(ParamError):
        solve_tilt(make("uniform"), -3)


def test_scaling_alpha_values():
    got = scaling_alpha(make("uniform"), 10 ** 6)
    assert got == pytest.approx(math.sqrt(6e6) / math.pi, rel=0.05)
    got = scaling_alpha(make("gibbs", theta=1, beta=1), 10 ** 4)
    assert got == pytest.approx(100.0, rel=0.05)


# ---------------------------------------------------------------------------
# regime gates


def test_asymptotics_refuse_nonergodic():
    w2 = make("weighted", y=2)
    for op in (omega, sigma_sq, shape_curve):
        with pytest.raises(RegimeError):
            op(w2)
    with pytest.raises(RegimeError):
        limit_shape(w2, 1.0)
    with pytest.raises(RegimeError):
        scaling_alpha(w2, 100)


def test_asymptotics_refuse_out_of_scope():
    ew = make("ewens", theta=1)
    with pytest.raises(RegimeError):
        omega(ew)
    with pytest.raises(RegimeError):
        limit_shape(ew, 1.0)
