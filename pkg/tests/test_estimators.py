import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from navflow.estimators import (InsufficientData, ReplicateStats, dead_end_fraction,
                                density_product, fit_fluctuation_exponent, lhs_ratio,
                                link_density_hat, rhs_directed, rhs_radial,
                                sandwich_regions, sandwich_report)
from navflow.flow import accumulate_traffic
from navflow.geometry import Domain, OutOfDomainError
from navflow.navigation import NavigationForest, NavigationScheme, build_forest
from navflow.pointprocess import Affine, Constant, Radial, replicate_rng, sample_pattern
from navflow.quadrature import QuadratureError, adaptive_simpson

BOX = Domain.box((0.5, 0.5))
BALL = Domain.ball(1.0)


def stats(s, pairs, measure=1.0):
    return [ReplicateStats(s, i, k, t, measure, True, 0.0, 0.0) for i, (t, k) in enumerate(pairs)]


def test_lhs_identical_replicates():
    est = lhs_ratio(stats(5.0, [(12.0, 3)] * 4))
    assert est.value == pytest.approx(12 / 15)
    assert est.se == pytest.approx(0.0, abs=1e-15)


def test_lhs_two_replicates():
    assert lhs_ratio(stats(10.0, [(10, 2), (30, 2)])).value == pytest.approx(1.0)


def test_lhs_needs_crossings():
    with pytest.raises(InsufficientData):
        lhs_ratio(stats(10.0, [(0, 0), (0, 0)]))
    with pytest.raises(InsufficientData):
        lhs_ratio(stats(10.0, [(1, 1)]))


def test_lhs_consistent_on_synthetic_means():
    rng = np.random.default_rng(0)
    k = rng.poisson(20, 20000)
    t = k * rng.gamma(4.0, 2.0, 20000)
    est = lhs_ratio(stats(2.0, list(zip(t, k))))
    assert abs(est.value - 4.0) < 4 * est.se
    assert est.se < 0.02


def test_link_density():
    assert link_density_hat(stats(1.0, [(0, 40), (0, 60)]), 25.0).value == pytest.approx(2.0)


def test_product_is_lhs_times_density():
    rows = stats(7.0, [(10.0, 2), (25.0, 4), (9.0, 1)], measure=3.0)
    assert density_product(rows).value == pytest.approx(lhs_ratio(rows).value * link_density_hat(rows).value)


def test_rhs_directed_examples():
    x = (0.25, 0.0)
    assert rhs_directed(x, Constant(1), Constant(1), BOX) == pytest.approx(0.75, abs=1e-10)
    mu = Affine(0.5, (1.0, 0.0))
    assert rhs_directed(x, Constant(1), mu, BOX) == pytest.approx(9 / 32, abs=1e-7)
    assert rhs_directed((-0.5, 0.0), Constant(1), Constant(1), BOX) == 0.0
    with pytest.raises(OutOfDomainError):
        rhs_directed((0.7, 0.0), Constant(1), Constant(1), BOX)


def test_rhs_radial_examples():
    assert rhs_radial((0.5, 0.0), Constant(1), Constant(1), BALL) == pytest.approx(0.75, abs=1e-10)
    ball3 = Domain.ball(1.0, 3)
    assert rhs_radial((0.5, 0, 0), Constant(1), Constant(1), ball3) == pytest.approx(7 / 6, abs=1e-7)
    assert rhs_radial((1.0, 0.0), Constant(1), Constant(1), BALL) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        rhs_radial((0.0, 0.0), Constant(1), Constant(1), BALL)


@given(st.floats(-0.45, 0.45), st.floats(-0.45, 0.45), st.floats(0, 3), st.floats(-2, 2))
def test_rhs_directed_polynomial_closed_form(x1, x2, c, b):
    # lambda = 1 + x1 / 2, mu = c + b x1 (kept nonnegative on D)
    lam = Affine(1.0, (0.5, 0.0))
    mu = Affine(c + abs(b), (b, 0.0))
    a0 = c + abs(b)
    F = lambda u: a0 * u + (a0 * 0.5 + b) * u * u / 2 + b * 0.5 * u ** 3 / 3
    exact = F(x1) - F(-0.5)
    assert rhs_directed((x1, x2), lam, mu, BOX) == pytest.approx(exact, abs=1e-7)


def test_rhs_radial_profile():
    # lambda = 2 - r, mu = 1 on the unit disc; 1/r * int_r^1 (2 - u) u du
    lam = Radial((0.0, 1.0), (2.0, 1.0))
    r = 0.3
    exact = ((1 - 1 / 3) - (r * r - r ** 3 / 3)) / r
    assert rhs_radial((0.0, r), lam, Constant(1), BALL) == pytest.approx(exact, abs=1e-7)


def test_simpson_handles_kinks_and_signs():
    assert adaptive_simpson(abs, -1.0, 2.0) == pytest.approx(2.5, abs=1e-8)
    assert adaptive_simpson(math.sin, math.pi, 0.0) == pytest.approx(-2.0, abs=1e-8)
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda t: 1 / t if t else math.inf, 0.0, 1.0)


def test_exponent_fit_exact_powers():
    s = np.array([100, 200, 400, 800])
    fit = fit_fluctuation_exponent(s, s ** 0.5)
    assert fit.exponent == pytest.approx(0.5) and fit.r2 == pytest.approx(1.0)
    fit = fit_fluctuation_exponent(s, 3 * s ** 0.7)
    assert fit.exponent == pytest.approx(0.7)
    assert fit.intercept == pytest.approx(math.log(3))
    with pytest.raises(ValueError):
        fit_fluctuation_exponent(s, [1, 0, 2, 3])
    with pytest.raises(InsufficientData):
        fit_fluctuation_exponent([1, 2], [1, 2])


def test_lhs_scales_linearly_with_mu():
    box = BOX
    for i in range(5):
        p = sample_pattern(box, 30.0, Constant(1.0), replicate_rng(20, i))
        f = build_forest(p, NavigationScheme.dst())
        base = accumulate_traffic(f, np.ones(len(f)))
        scaled = accumulate_traffic(f, 3.0 * np.ones(len(f)))
        assert np.array_equal(scaled, 3.0 * base)


def test_dead_end_fraction():
    p = sample_pattern(BALL, 10.0, Constant(1.0), replicate_rng(1, 0))
    assert dead_end_fraction(build_forest(p, NavigationScheme.dst()), BALL, 10.0, 0.05) == 0.0
    assert dead_end_fraction(build_forest(p, NavigationScheme.min_hop(1e9)), BALL, 10.0, 0.0) == 0.0
    assert dead_end_fraction(build_forest(p, NavigationScheme.min_hop(1e-6)), BALL, 10.0, 0.0) == 1.0


def test_sandwich_empty_pattern():
    f = NavigationForest(np.zeros(0, dtype=np.int64), "directed", np.zeros((0, 2)))
    rep = sandwich_report(f, np.zeros(0), np.zeros(0), BOX, (0.25, 0.0), 100.0, 10.0, 5.0, 0.05)
    assert tuple(rep) == (0.0, 0.0, 0.0, True)


def test_sandwich_regions_inner_optional():
    inner, outer = sandwich_regions("radial", BALL, (0.5, 0.0), 200.0, 200 ** 0.6, 200 ** 0.55, 0.05)
    assert inner is None and outer is not None
    inner, _ = sandwich_regions("directed", BOX, (0.25, 0.0), 200.0, 200 ** 0.6, 200 ** 0.55, 0.05)
    assert inner is not None


@pytest.mark.parametrize("mode", ["directed", "radial"])
def test_sandwich_holds_when_trajectories_are_narrow(mode):
    # a generous cylinder makes the event hold, so the bounds must
    domain = BOX if mode == "directed" else BALL
    scheme = NavigationScheme.dst() if mode == "directed" else NavigationScheme.rst()
    x = (0.25, 0.0) if mode == "directed" else (0.5, 0.0)
    s, g, h = (40.0, 19.0, 18.0) if mode == "directed" else (40.0, 19.0, 12.0)
    from navflow.flow import check_events
    held = 0
    for i in range(20):
        p = sample_pattern(domain, s, Constant(1.0), replicate_rng(30, i))
        f = build_forest(p, scheme)
        rates = np.ones(len(f))
        ev = check_events(f, domain, s, 0.05, h)
        rep = sandwich_report(f, accumulate_traffic(f, rates), rates, domain, x, s, g, h, 0.05)
        if ev.passed:
            held += 1
            assert rep.holds
        assert rep.lower <= rep.upper
    assert held > 0
