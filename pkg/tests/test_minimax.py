import math

import numpy as np
import pytest

from blockiso.design import make_rng
from blockiso.exceptions import MixedDerivativesPresent, ZeroNoise
from blockiso.functions import TestFunction, constant_function, get_function
from blockiso.minimax import (
    Perturbation,
    build_perturbation,
    certify_rate_optimality,
    kl_budget,
    two_point_bound,
)
from blockiso.rates import balanced_beta, kappa_star_argmax


def _scaled(f, c):
    return TestFunction(f"{f.id}x{c}", lambda p: c * f(p), f.x0, f.alpha,
                        tuple(c * v for v in f.marginal_derivs), dict(f.mixed_derivs))


def test_two_point_worked_example():
    assert two_point_bound(0.1, 2.0, 1.0) == pytest.approx(0.0125 * math.exp(-1), rel=1e-15)
    assert two_point_bound(0.1, 2.0, 1.0) == pytest.approx(0.0045985, abs=1e-7)


def test_two_point_limits_and_monotonicity():
    assert two_point_bound(0.4, 0.0, 1.0) == 0.05
    vals = [two_point_bound(0.1, 2.0, s) for s in (0.5, 1.0, 2.0, 4.0)]
    assert vals == sorted(vals)
    with pytest.raises(ValueError):
        two_point_bound(0.0, 1.0, 1.0)


def test_identity_perturbation_values():
    p = build_perturbation(get_function("identity1d"), 10**4)
    assert p.gamma == pytest.approx(0.39685, abs=1e-5)
    assert p.h[0] == pytest.approx(0.7937, abs=1e-4)
    assert p.omega_n == pytest.approx((10**4) ** (-1 / 3))


@pytest.mark.parametrize("name", ["F1", "F2", "F3", "F4", "sim_f1"])
def test_perturbation_is_monotone_and_below(name):
    f = get_function(name)
    p = build_perturbation(f, 10**4)
    rng = make_rng(0)
    a = rng.random((1000, f.dim))
    b = a + rng.random((1000, f.dim)) * (1 - a)
    assert np.all(p(b) >= p(a) - 1e-12)
    assert np.all(p(a) <= f(a) + 1e-15)


def test_containment_for_large_n():
    f = get_function("F1")
    p = build_perturbation(f, 10**6)
    lo, hi = p.support_box
    assert np.all(lo >= 0)
    pts = make_rng(1).random((5000, 2))
    outside = ~np.all((pts >= lo) & (pts <= hi), axis=1)
    assert outside.sum() > 4000
    np.testing.assert_array_equal(p(pts[outside]), f(pts[outside]))


def test_constant_base_is_left_unchanged():
    f = constant_function(2.0, 2)
    with pytest.raises(ValueError):
        build_perturbation(f, 1000)
    p = Perturbation(f, np.array([0.5, 0.5]), np.array([0.1, 0.1]), 0.1, 1000,
                     np.array([0.5, 0.5]), 1.0, 1, 0.1, 4.0)
    pts = make_rng(2).random((200, 2))
    np.testing.assert_array_equal(p(pts), f(pts))
    assert p.gap == 0.0


@pytest.mark.parametrize("name", ["identity1d", "F1", "F4", "sim_f1"])
def test_gap_is_of_local_order(name):
    f = get_function(name)
    p = build_perturbation(f, 10**4)
    rep = kappa_star_argmax(f.alpha, balanced_beta(f.dim))
    s_star = sum(1 for k in rep.permutation[rep.kappa_star - 1:] if f.alpha[k] != math.inf)
    assert p.gap >= 0.9 * p.omega_n * s_star * p.gamma


@pytest.mark.parametrize("name", ["identity1d", "F1", "F4"])
def test_kl_budget_within_target(name):
    p = build_perturbation(get_function(name), 10**4)
    assert kl_budget(p) <= 2.5


def test_kl_budget_shrinks_with_gamma():
    f = get_function("F1")
    vals = [kl_budget(build_perturbation(f, 10**4, gamma=g)) for g in (0.4, 0.2, 0.1, 0.05)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_random_design_budget_uses_qmc():
    p = build_perturbation(get_function("identity1d"), 10**4, design="random")
    a = kl_budget(p, design="random", seed=0)
    b = kl_budget(p, design="random", seed=1)
    assert a == pytest.approx(b, rel=1e-3)
    assert a <= 2.5


def test_identity_certificate_is_flat():
    cert = certify_rate_optimality(get_function("identity1d"), [10**3, 10**4, 10**5])
    assert cert["spread_ratio"] <= 1.01
    assert cert["rate_exponent"] == pytest.approx(1 / 3)
    assert all(r["bound"] > 0 for r in cert["rows"])


def test_rate_exponent_matches_report():
    for name in ("F1", "F2", "F4"):
        f = get_function(name)
        cert = certify_rate_optimality(f, [10**3, 10**4])
        assert cert["rate_exponent"] == kappa_star_argmax(f.alpha, balanced_beta(2)).rate_exponent


def test_joint_scaling_law():
    f = get_function("F1")
    c = 3.0
    a = certify_rate_optimality(f, [10**4], sigma=1.0)
    b = certify_rate_optimality(_scaled(f, c), [10**4], sigma=c)
    den = 2 + 1 + 1
    ra, rb = a["rows"][0], b["rows"][0]
    assert rb["normalized"] / ra["normalized"] == pytest.approx(c ** (1 - 2 / den), rel=1e-9)
    assert rb["normalized_over_K"] == pytest.approx(ra["normalized_over_K"], rel=1e-9)


def test_zero_noise_and_mixed_refused():
    with pytest.raises(ZeroNoise):
        certify_rate_optimality(get_function("F1"), [10, 100], sigma=0.0)
    with pytest.raises(ZeroNoise):
        build_perturbation(get_function("F1"), 100, sigma=0.0)
    with pytest.raises(MixedDerivativesPresent):
        build_perturbation(get_function("F5"), 1000)


def test_n_list_must_increase():
    with pytest.raises(ValueError):
        certify_rate_optimality(get_function("F1"), [1000, 1000])
