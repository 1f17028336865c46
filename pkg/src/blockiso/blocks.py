"""Rectangle sums, counts and means: summed-area tables and a plain scan."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .design import Dataset
from .exceptions import EmptyBlock, NotALattice

# cap on the number of cells of a coordinate-compressed table
MAX_TABLE_CELLS = 20_000_000


@dataclass(frozen=True)
class Block:
    """Closed rectangle ``[lower, upper]``; points on the boundary belong to it."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("block corners must have the same dimension")
        if np.any(lo > hi):
            raise ValueError("block lower corner must be <= upper corner coordinate-wise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


class BlockMean(NamedTuple):
    mean: float
    count: int


def _compensated_cumsum(a: np.ndarray, axis: int) -> np.ndarray:
    """Running sum along ``axis`` with Neumaier compensation."""
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    s = np.zeros(a.shape[1:])
    comp = np.zeros(a.shape[1:])
    for i in range(a.shape[0]):
        x = a[i]
        t = s + x
        big = np.abs(s) >= np.abs(x)
        comp += np.where(big, (s - t) + x, (x - t) + s)
        s = t
        out[i] = s + comp
    return np.moveaxis(out, 0, axis)


def _padded_prefix(values: np.ndarray, compensated: bool) -> np.ndarray:
    d = values.ndim
    acc = values.astype(float if compensated else values.dtype)
    for ax in range(d):
        acc = _compensated_cumsum(acc, ax) if compensated else np.cumsum(acc, axis=ax)
    return np.pad(acc, [(1, 0)] * d)


class PrefixTable:
    """Exclusive prefix sums over a (possibly coordinate-compressed) product grid.

    ``cum_sum[i_1, ..., i_d]`` is the sum of responses with grid index below
    ``i`` in every axis. A full lattice has implied counts; a compressed table
    over scattered points carries ``cum_count`` as well.
    """

    def __init__(self, axes, cum_sum: np.ndarray, cum_count: Optional[np.ndarray] = None):
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.cum_sum = cum_sum
        self.cum_count = cum_count
        self.dims = tuple(len(a) for a in self.axes)
        self.cum_sum.setflags(write=False)
        if cum_count is not None:
            self.cum_count.setflags(write=False)

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def total(self) -> float:
        return float(self.cum_sum[tuple(self.dims)])

    @property
    def total_count(self) -> int:
        if self.cum_count is None:
            return int(np.prod(self.dims))
        return int(self.cum_count[tuple(self.dims)])

    def index_range(self, lower, upper):
        """Per-axis inclusive index range ``[lo, hi]`` of grid values inside ``[lower, upper]``."""
        lo = np.array([np.searchsorted(a, v, "left") for a, v in zip(self.axes, np.atleast_1d(lower))])
        hi = np.array([np.searchsorted(a, v, "right") - 1 for a, v in zip(self.axes, np.atleast_1d(upper))])
        return lo, hi

    def block_sums(self, lo_axes: Sequence[np.ndarray], hi_axes: Sequence[np.ndarray]):
        """Sums and counts for every combination of per-axis lower/upper indices.

        Returns arrays of shape ``(len(lo_0), ..., len(lo_{d-1}), len(hi_0), ..., len(hi_{d-1}))``.
        Combinations with ``hi < lo`` on some axis get count 0.
        """
        d = self.d
        lo_b, hi_b = [], []
        for k in range(d):
            shape_lo = [1] * (2 * d)
            shape_lo[k] = -1
            shape_hi = [1] * (2 * d)
            shape_hi[d + k] = -1
            lo_b.append(np.asarray(lo_axes[k], dtype=np.intp).reshape(shape_lo))
            hi_b.append((np.asarray(hi_axes[k], dtype=np.intp) + 1).reshape(shape_hi))
        valid = np.ones([1] * (2 * d), dtype=bool)
        for k in range(d):
            valid = valid & (hi_b[k] > lo_b[k])
        sums = 0.0
        counts = 0
        for eps in itertools.product((0, 1), repeat=d):
            idx = tuple(hi_b[k] if e else lo_b[k] for k, e in enumerate(eps))
            sign = -1 if (d - sum(eps)) % 2 else 1
            sums = sums + sign * self.cum_sum[idx]
            if self.cum_count is not None:
                counts = counts + sign * self.cum_count[idx]
        if self.cum_count is None:
            counts = np.ones([1] * (2 * d), dtype=np.int64)
            for k in range(d):
                counts = counts * np.maximum(hi_b[k] - lo_b[k], 0)
        full = np.broadcast_shapes(np.shape(sums), valid.shape)
        counts = np.where(valid, counts, 0)
        return np.broadcast_to(sums, full), np.broadcast_to(counts, full)

    def box(self, lower, upper) -> BlockMean:
        lo, hi = self.index_range(lower, upper)
        sums, counts = self.block_sums([[v] for v in lo], [[v] for v in hi])
        count = int(counts.ravel()[0])
        if count == 0:
            raise EmptyBlock(f"no design point in [{lower}, {upper}]")
        return BlockMean(float(sums.ravel()[0]) / count, count)


def build_prefix(ds: Dataset, compensated: bool = True) -> PrefixTable:
    """Summed-area table of a full lattice dataset."""
    if not ds.is_lattice:
        raise NotALattice("build_prefix needs a lattice dataset; use build_rank_prefix for point sets")
    return PrefixTable(ds.design.axes, _padded_prefix(ds.grid_responses(), compensated))


def build_rank_prefix(ds: Dataset, compensated: bool = True) -> PrefixTable:
    """Summed-area table over the product of observed coordinates of any point set."""
    if ds.is_lattice:
        return build_prefix(ds, compensated)
    axes = [np.unique(ds.points[:, k]) for k in range(ds.dim)]
    cells = int(np.prod([a.size for a in axes], dtype=float))
    if cells > MAX_TABLE_CELLS:
        raise MemoryError(f"compressed table would need {cells} cells")
    idx = tuple(np.searchsorted(axes[k], ds.points[:, k]) for k in range(ds.dim))
    shape = tuple(a.size for a in axes)
    sums = np.zeros(shape)
    np.add.at(sums, idx, ds.responses)
    counts = np.zeros(shape, dtype=np.int64)
    np.add.at(counts, idx, 1)
    return PrefixTable(axes, _padded_prefix(sums, compensated), _padded_prefix(counts, False))


def naive_block_mean(points: np.ndarray, responses: np.ndarray, lower, upper) -> BlockMean:
    inside = np.all((points >= np.asarray(lower)) & (points <= np.asarray(upper)), axis=1)
    count = int(inside.sum())
    if count == 0:
        raise EmptyBlock(f"no design point in [{lower}, {upper}]")
    return BlockMean(float(responses[inside].sum()) / count, count)


def block_mean(source: Union[Dataset, PrefixTable], block: Block) -> BlockMean:
    """Average response over a closed block: table lookup or linear scan."""
    if isinstance(source, PrefixTable):
        return source.box(block.lower, block.upper)
    return naive_block_mean(source.points, source.responses, block.lower, block.upper)
