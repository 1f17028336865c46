import numpy as np
import pytest
from sklearn.base import clone

from blockiso.blocks import Block, block_mean, build_prefix
from blockiso.design import Dataset, build_lattice, dataset_from_points, generate_dataset, lattice_from_axes, make_rng
from blockiso.estimator import MaxMinBlockRegressor, fit_grid, max_min_estimate, pava
from blockiso.exceptions import NotALattice
from blockiso.functions import get_function

from oracles import brute_max_min, grid_is_isotonic, isotonic_oracle


def _grid(values, axes):
    spec = lattice_from_axes(axes)
    return Dataset(spec, spec.grid_points(), np.asarray(values, dtype=float))


def test_three_point_line():
    ds = _grid([3, 1, 2], [[0.25, 0.5, 0.75]])
    assert max_min_estimate(ds, [0.5]).value == 2.0


def test_2x2_corner_query():
    ds = _grid([1, 4, 2, 3], [[0, 1], [0, 1]])
    res = max_min_estimate(ds, [1, 1])
    assert res.value == 3.5
    assert res.candidates_scanned == 4


def test_constant_response():
    rng = make_rng(0)
    ds = _grid(np.full(30, -1.25), [np.arange(5) / 5, np.arange(6) / 6])
    for x0 in rng.random((10, 2)):
        assert max_min_estimate(ds, x0).value == -1.25


def test_fitresult_corners_reproduce_value():
    rng = make_rng(1)
    spec = build_lattice(64, (0.5, 0.5), (0.5, 0.5))
    ds = generate_dataset(spec, get_function("F1"), 1.0, seed=1)
    table = build_prefix(ds)
    for x0 in rng.random((20, 2)):
        res = max_min_estimate(ds, x0, table)
        bm = block_mean(table, Block(res.argmax_lower, res.argmin_upper))
        assert abs(bm.mean - res.value) <= 1e-10
        assert np.all(res.argmax_lower <= x0) and np.all(res.argmin_upper >= x0)
        assert ds.responses.min() <= res.value <= ds.responses.max()


def test_frozen_seeded_estimate():
    spec = build_lattice(225, (0.5, 0.5), (0.5, 0.5))
    ds = generate_dataset(spec, get_function("sim_f1"), 1.0, seed=2024)
    assert max_min_estimate(ds, (0.5, 0.5)).value == pytest.approx(FROZEN_SIM_F1, abs=1e-12)


FROZEN_SIM_F1 = 2.7284678936557896  # brute-force enumeration on the same data


def test_tie_break_is_lexicographic():
    # every block has mean 0, so the first lower and first upper corner win
    ds = _grid(np.zeros(9), [[0, 0.5, 1], [0, 0.5, 1]])
    res = max_min_estimate(ds, [0.5, 0.5])
    np.testing.assert_array_equal(res.argmax_lower, [0, 0])
    np.testing.assert_array_equal(res.argmin_upper, [0.5, 0.5])


def test_off_lattice_query_and_scattered_data():
    rng = make_rng(3)
    pts = rng.random((25, 2))
    y = rng.normal(size=25)
    ds = dataset_from_points(pts, y)
    for x0 in rng.random((10, 2)):
        got = max_min_estimate(ds, x0).value
        assert got == pytest.approx(brute_max_min(pts, y, x0), abs=1e-12)


@pytest.mark.parametrize("x0", [[0.95, 0.95], [0.01, 0.01], [0.01, 0.99], [0.5, 0.5]])
def test_queries_outside_the_data_hull(x0):
    # the block spanned by x0 and any data point is admissible, so a value always exists
    pts = np.array([[0.9, 0.1], [0.1, 0.9], [0.4, 0.6]])
    y = np.array([1.0, 2.0, -1.0])
    ds = dataset_from_points(pts, y)
    assert max_min_estimate(ds, x0).value == pytest.approx(brute_max_min(pts, y, x0), abs=1e-14)


def test_dimension_mismatch():
    ds = _grid([1, 2], [[0, 1]])
    with pytest.raises(ValueError):
        max_min_estimate(ds, [0.5, 0.5])


def test_isotonic_data_is_reproduced():
    spec = build_lattice(100, (0.5, 0.5), (0.5, 0.5))
    ds = generate_dataset(spec, get_function("sim_f1"), 0.0, seed=0)
    np.testing.assert_allclose(fit_grid(ds), ds.responses, rtol=0, atol=1e-13)


def test_isotonic_data_brute_force_5x5():
    spec = build_lattice(25, (0.5, 0.5), (0.5, 0.5))
    ds = generate_dataset(spec, get_function("F1"), 0.0, seed=0)
    for p, y in zip(ds.points, ds.responses):
        assert brute_max_min(ds.points, ds.responses, p) == pytest.approx(y, abs=1e-14)


@pytest.mark.parametrize("shape", [(12,), (7, 9), (4, 5, 3)])
def test_pairs_and_pointwise_agree(shape):
    rng = make_rng(len(shape))
    ds = _grid(rng.normal(size=int(np.prod(shape))), [np.arange(n) / n for n in shape])
    a = fit_grid(ds, method="pairs")
    b = fit_grid(ds, method="pointwise")
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    assert grid_is_isotonic(a, shape)


def test_fit_grid_rejects_scattered():
    ds = dataset_from_points(make_rng(0).random((10, 2)), np.zeros(10))
    with pytest.raises(NotALattice):
        fit_grid(ds)


def test_fit_grid_bad_method():
    with pytest.raises(ValueError):
        fit_grid(_grid([1, 2], [[0, 1]]), method="magic")


def test_1d_fit_grid_matches_pava_50():
    rng = make_rng(50)
    y = rng.normal(size=50) + np.linspace(0, 2, 50)
    ds = _grid(y, [np.arange(50) / 50])
    np.testing.assert_allclose(fit_grid(ds), pava(y), atol=1e-12)


@pytest.mark.parametrize("y,w,expected", [
    ([3, 1, 2], None, [2, 2, 2]),
    ([1, 2, 2, 5], None, [1, 2, 2, 5]),
    ([2, 1], [1, 3], [1.25, 1.25]),
    ([5], None, [5]),
])
def test_pava_examples(y, w, expected):
    np.testing.assert_allclose(pava(y, w), expected, rtol=0, atol=1e-15)


def test_pava_against_sklearn_and_weighted_mean():
    rng = make_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 40))
        y = rng.standard_t(3, size=n)
        w = rng.uniform(0.1, 3, size=n)
        fit = pava(y, w)
        np.testing.assert_allclose(fit, isotonic_oracle(y, w), atol=1e-10)
        assert np.all(np.diff(fit) >= -1e-12)
        assert np.dot(w, fit) == pytest.approx(np.dot(w, y), rel=1e-10, abs=1e-10)


def test_pava_validation():
    with pytest.raises(ValueError):
        pava([1, 2], [1])
    with pytest.raises(ValueError):
        pava([1, 2], [1, 0])


def test_regressor_roundtrip():
    spec = build_lattice(64, (0.5, 0.5), (0.5, 0.5))
    ds = generate_dataset(spec, get_function("F1"), 0.3, seed=4)
    est = MaxMinBlockRegressor().fit(ds.points, ds.responses)
    pred = est.predict(ds.points)
    np.testing.assert_allclose(pred, est.fit_grid(), atol=1e-12)
    assert est.n_features_in_ == 2
    assert est.score(ds.points, ds.responses) > 0


def test_regressor_params_and_clone():
    est = MaxMinBlockRegressor(compensated_sums=False)
    assert est.get_params() == {"compensated_sums": False}
    assert clone(est).get_params() == {"compensated_sums": False}
    est.set_params(compensated_sums=True)
    assert est.compensated_sums is True


def test_regressor_unfitted_and_shape_errors():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        MaxMinBlockRegressor().predict([[0.5, 0.5]])
    est = MaxMinBlockRegressor().fit([[0.1, 0.2], [0.3, 0.4]], [1, 2])
    with pytest.raises(ValueError):
        est.predict([[0.5]])


def test_regressor_scattered_training_data():
    rng = make_rng(8)
    X = rng.random((30, 2))
    y = X.sum(axis=1) + 0.1 * rng.normal(size=30)
    est = MaxMinBlockRegressor().fit(X, y)
    q = rng.random((5, 2))
    got = est.predict(q)
    for x0, g in zip(q, got):
        assert g == pytest.approx(brute_max_min(X, y, x0), abs=1e-12)
