"""The max-min block estimator for multiple isotonic regression.

At a query point ``x0`` the estimate is::

    max over lower corners u <= x0 of
        min over upper corners v >= x0 with a nonempty block [u, v] of
            mean{Y_i : u <= X_i <= v}

Block averages only change when a corner crosses an observed coordinate, so
corners range over the observed coordinates per axis plus ``x0`` itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .blocks import PrefixTable, build_prefix, build_rank_prefix
from .design import Dataset, dataset_from_points
from .exceptions import NoFeasibleBlock, NotALattice

# element budget for one (lower x upper) slab of block means
_CHUNK_ELEMS = 4_000_000
# fit_grid switches to the all-pairs sweep below this many node pairs
_ALL_PAIRS_LIMIT = 4_000_000


@dataclass(frozen=True)
class FitResult:
    query: np.ndarray
    value: float
    argmax_lower: np.ndarray
    argmin_upper: np.ndarray
    candidates_scanned: int


def _table_for(ds: Dataset, compensated: bool = True) -> PrefixTable:
    return build_prefix(ds, compensated) if ds.is_lattice else build_rank_prefix(ds, compensated)


def max_min_estimate(ds: Dataset, x0, table: Optional[PrefixTable] = None) -> FitResult:
    """Exact max-min block estimate at ``x0``.

    Ties in the outer max and the inner min go to the lexicographically
    smallest corner; the value itself does not depend on the tie rule.
    """
    if ds.n == 0:
        raise ValueError("empty dataset")
    table = table if table is not None else _table_for(ds)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != table.d:
        raise ValueError(f"x0 has dimension {x0.size}, data has {table.d}")

    low_c, up_c, lo_idx, hi_idx = [], [], [], []
    for axis, xk in zip(table.axes, x0):
        lc = np.unique(np.append(axis[axis <= xk], xk))
        uc = np.unique(np.append(axis[axis >= xk], xk))
        low_c.append(lc)
        up_c.append(uc)
        lo_idx.append(np.searchsorted(axis, lc, "left"))
        hi_idx.append(np.searchsorted(axis, uc, "right") - 1)

    n_up = int(np.prod([len(u) for u in up_c]))
    rest = int(np.prod([len(l) for l in low_c[1:]]))
    step = max(1, _CHUNK_ELEMS // max(1, n_up * rest))

    best_val = -np.inf
    best_row = best_col = None
    offset = 0
    for start in range(0, len(low_c[0]), step):
        chunk = [lo_idx[0][start:start + step]] + lo_idx[1:]
        sums, counts = table.block_sums(chunk, hi_idx)
        rows = int(np.prod(sums.shape[: table.d]))
        sums = sums.reshape(rows, n_up)
        counts = counts.reshape(rows, n_up)
        means = np.full(sums.shape, np.inf)
        np.divide(sums, counts, out=means, where=counts > 0)
        inner_arg = np.argmin(means, axis=1)
        inner = means[np.arange(rows), inner_arg]
        inner[~np.isfinite(inner)] = -np.inf
        r = int(np.argmax(inner))
        if inner[r] > best_val:
            best_val = float(inner[r])
            best_row, best_col = offset + r, int(inner_arg[r])
        offset += rows

    if best_row is None:
        raise NoFeasibleBlock(f"no nonempty block contains {x0.tolist()}")
    lower_shape = tuple(len(l) for l in low_c)
    lower_multi = np.unravel_index(best_row, lower_shape)
    upper_multi = np.unravel_index(best_col, tuple(len(u) for u in up_c))
    # every block average lies in the data range; prefix differences can overshoot by an ulp
    lo, hi = float(ds.responses.min()), float(ds.responses.max())
    return FitResult(
        query=x0,
        value=min(max(best_val, lo), hi),
        argmax_lower=np.array([low_c[k][i] for k, i in enumerate(lower_multi)]),
        argmin_upper=np.array([up_c[k][i] for k, i in enumerate(upper_multi)]),
        candidates_scanned=int(np.prod(lower_shape)) * n_up,
    )


def _fit_grid_all_pairs(table: PrefixTable) -> np.ndarray:
    d = table.d
    full = [np.arange(n) for n in table.dims]
    sums, counts = table.block_sums(full, full)
    means = np.full(sums.shape, np.inf)
    np.divide(sums, counts, out=means, where=counts > 0)
    # min over upper corners b >= x: suffix minimum along every upper axis
    for ax in range(d, 2 * d):
        means = np.flip(np.minimum.accumulate(np.flip(means, ax), axis=ax), ax)
    mask = np.ones([1] * (2 * d), dtype=bool)
    for k, n in enumerate(table.dims):
        a = np.arange(n).reshape([-1 if i == k else 1 for i in range(2 * d)])
        x = np.arange(n).reshape([-1 if i == d + k else 1 for i in range(2 * d)])
        mask = mask & (a <= x)
    means = np.where(mask, means, -np.inf)
    return means.max(axis=tuple(range(d))).ravel()


def fit_grid(ds: Dataset, table: Optional[PrefixTable] = None, method: str = "auto") -> np.ndarray:
    """Max-min estimate at every lattice node, in the dataset's row-major order.

    ``method="pairs"`` sweeps all (lower, upper) node pairs at once with
    suffix minima; ``"pointwise"`` calls :func:`max_min_estimate` per node.
    """
    if not ds.is_lattice:
        raise NotALattice("fit_grid needs a lattice dataset")
    table = table if table is not None else build_prefix(ds)
    if method == "auto":
        method = "pairs" if ds.n**2 <= _ALL_PAIRS_LIMIT else "pointwise"
    if method == "pairs":
        return np.clip(_fit_grid_all_pairs(table), ds.responses.min(), ds.responses.max())
    if method != "pointwise":
        raise ValueError("method must be 'auto', 'pairs' or 'pointwise'")
    return np.array([max_min_estimate(ds, p, table).value for p in ds.points])


def pava(y, weights=None) -> np.ndarray:
    """Weighted isotonic least squares (nondecreasing) by pool-adjacent-violators."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != y.shape:
        raise ValueError("y and weights must have the same length")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    means, wts, sizes = [], [], []
    for yi, wi in zip(y, w):
        means.append(yi)
        wts.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, n2 = means.pop(), wts.pop(), sizes.pop()
            m1, w1, n1 = means.pop(), wts.pop(), sizes.pop()
            wt = w1 + w2
            means.append((w1 * m1 + w2 * m2) / wt)
            wts.append(wt)
            sizes.append(n1 + n2)
    return np.repeat(means, sizes)


class MaxMinBlockRegressor(RegressorMixin, BaseEstimator):
    """Tuning-free max-min block regressor for coordinate-wise nondecreasing targets.

    ``predict`` evaluates the block estimator at each query row; a lattice
    training set is detected automatically and served from a summed-area table.

    Parameters
    ----------
    compensated_sums : bool, default=True
        Use compensated accumulation when building the prefix table.
    """

    def __init__(self, compensated_sums: bool = True):
        self.compensated_sums = compensated_sums

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.dataset_ = dataset_from_points(X, y)
        self.table_ = _table_for(self.dataset_, self.compensated_sums)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "table_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.array([max_min_estimate(self.dataset_, x, self.table_).value for x in X])

    def fit_grid(self):
        """In-sample fit at every lattice node (lattice training data only)."""
        check_is_fitted(self, "table_")
        return fit_grid(self.dataset_, self.table_)
