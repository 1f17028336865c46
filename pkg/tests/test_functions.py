import math

import numpy as np
import pytest

from blockiso.functions import REGISTRY, constant_function, get_function, taylor_model
from blockiso.rates import INF, SmoothnessProfile


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_registry_functions_are_monotone(name):
    assert get_function(name).is_monotone(n_pairs=1000, seed=3)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_declared_alpha_is_odd_or_inf(name):
    f = get_function(name)
    assert all(a == INF or a % 2 == 1 for a in f.alpha)
    assert f.profile().dim == f.dim


def test_f3_derivative_matches_local_slope():
    f = get_function("F3")
    h = 1e-6
    slope = (f.value_at((0.5 + h, 0.5)) - f.value_at((0.5 - h, 0.5))) / (2 * h)
    assert slope == pytest.approx(8.0, rel=1e-8)
    assert f.value_at((0.5, 0.9)) == f.value_at((0.5, 0.1))


@pytest.mark.parametrize("name", ["F4", "F5"])
def test_cubic_derivatives_by_finite_differences(name):
    f = get_function(name)
    h = 1e-2
    x0 = np.array(f.x0)
    for k in range(2):
        e = np.eye(2)[k] * h
        vals = [f.value_at(x0 + c * e) for c in (-2, -1, 1, 2)]
        third = (vals[3] - 2 * vals[2] + 2 * vals[1] - vals[0]) / (2 * h**3)
        assert third == pytest.approx(6.0, rel=1e-6)


def test_f5_mixed_table():
    table = get_function("F5").derivative_table
    assert table[(2, 1)] == 2.0 and table[(1, 2)] == 2.0 and table[(3, 0)] == 6.0


def test_sim_pair_share_derivatives():
    a, b = get_function("sim_f1"), get_function("sim_f2")
    assert a.derivative_table == pytest.approx(b.derivative_table)
    assert a.value_at((0.5, 0.5)) == pytest.approx(b.value_at((0.5, 0.5)))


def test_unknown_function():
    with pytest.raises(KeyError):
        get_function("F9")


def test_taylor_model_reproduces_derivatives():
    prof = SmoothnessProfile((0.3, 0.6), (1, 3), (2.0, 12.0))
    f = taylor_model(prof, value_at_x0=1.5)
    assert f.value_at((0.3, 0.6)) == 1.5
    assert f.value_at((0.4, 0.6)) == pytest.approx(1.5 + 0.2)
    assert f.value_at((0.3, 0.7)) == pytest.approx(1.5 + 12 / 6 * 0.1**3)
    assert f.is_monotone()


def test_constant_function():
    c = constant_function(2.0, 3)
    assert np.all(c(np.random.default_rng(0).random((5, 3))) == 2.0)
    assert c.alpha == (INF,) * 3
    assert math.isnan(c.marginal_derivs[0])
