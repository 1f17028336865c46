"""Design geometry: fixed lattices, random designs and the datasets built on them."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

Density = Callable[[np.ndarray], np.ndarray]

_BETA_TOL = 1e-12


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox stream for ``seed``; ``key`` selects an independent substream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _as_fraction(b) -> Optional[Fraction]:
    if isinstance(b, (Fraction, int)):
        return Fraction(b)
    fb = Fraction(float(b)).limit_denominator(10_000)
    if abs(float(fb) - float(b)) <= 1e-15:
        return fb
    return None


def lattice_size(n: int, beta) -> int:
    """``floor(n ** beta)`` computed with integer roots whenever beta is rational."""
    fb = _as_fraction(beta)
    if fb is None:
        m = int(math.floor(n ** float(beta)))
        # guard against pow rounding on either side
        while (m + 1) ** (1.0 / float(beta)) <= n * (1 + 1e-15):
            m += 1
        while m > 0 and m ** (1.0 / float(beta)) > n * (1 + 1e-15):
            m -= 1
        return m
    p, q = fb.numerator, fb.denominator
    target = n**p
    m = int(round(target ** (1.0 / q))) if target < 2**1000 else int(float(n) ** float(fb))
    while m**q > target:
        m -= 1
    while (m + 1) ** q <= target:
        m += 1
    return m


@dataclass(frozen=True)
class DesignSpec:
    """Geometry of the covariates ``X_1..X_n``.

    ``kind`` is ``"lattice"`` (full Cartesian grid with per-axis ``axes``) or
    ``"random"`` (i.i.d. draws from ``density``, bounded by ``density_bound``).
    """

    kind: str
    dim: int
    total_n: int
    beta: Optional[tuple] = None
    axes: Optional[tuple] = None
    density: Optional[Density] = field(default=None, compare=False)
    density_bound: float = 1.0

    @property
    def is_lattice(self) -> bool:
        return self.kind == "lattice"

    @property
    def lattice_sizes(self) -> tuple:
        if not self.is_lattice:
            raise ValueError("random designs have no lattice sizes")
        return tuple(len(a) for a in self.axes)

    def grid_points(self) -> np.ndarray:
        """All lattice nodes, row-major (last coordinate varies fastest)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def flat_to_multi(self, idx):
        return np.unravel_index(idx, self.lattice_sizes)

    def multi_to_flat(self, multi):
        return np.ravel_multi_index(multi, self.lattice_sizes)


def lattice_from_axes(axes: Sequence[Sequence[float]], beta=None) -> DesignSpec:
    arrs = tuple(np.asarray(a, dtype=float) for a in axes)
    for a in arrs:
        if a.ndim != 1 or a.size == 0 or np.any(np.diff(a) <= 0):
            raise ValueError("lattice axes must be nonempty and strictly increasing")
    total = int(np.prod([a.size for a in arrs]))
    return DesignSpec("lattice", len(arrs), total, beta=beta, axes=arrs)


def build_lattice(n: int, beta: Sequence, x0: Sequence[float]) -> DesignSpec:
    """Equally spaced lattice with ``floor(n**beta_k)`` nodes per axis, one of them at ``x0``.

    The midpoint grid ``(i + 1/2)/n_k`` is translated by less than half a gap so
    the node nearest to ``x0`` lands on it exactly; spacing stays ``1/n_k`` and
    every node stays inside [0, 1].
    """
    beta = tuple(beta)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if len(beta) != x0.size:
        raise ValueError("beta and x0 must have the same length")
    if any(float(b) <= 0 for b in beta):
        raise ValueError("beta entries must be positive")
    fracs = [_as_fraction(b) for b in beta]
    if all(f is not None for f in fracs):
        if sum(fracs) != 1:
            raise ValueError(f"beta must sum to 1, got {float(sum(fracs))}")
    elif abs(sum(float(b) for b in beta) - 1.0) > _BETA_TOL:
        raise ValueError("beta must sum to 1")
    if np.any(x0 <= 0) or np.any(x0 >= 1):
        raise ValueError("x0 must lie in the open unit cube")

    axes = []
    for b, xk in zip(beta, x0):
        nk = lattice_size(n, b)
        if nk < 2:
            raise ValueError(f"floor(n**{b}) = {nk} < 2; increase n")
        j0 = min(int(math.floor(xk * nk)), nk - 1)
        axes.append(xk + (np.arange(nk) - j0) / nk)
    return lattice_from_axes(axes, beta=beta)


def _validated_density(density: Optional[Density], bound: float) -> Density:
    if density is None:
        return lambda pts: np.ones(len(pts))

    def checked(pts: np.ndarray) -> np.ndarray:
        vals = np.asarray(density(pts), dtype=float).reshape(len(pts))
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("density must be finite and nonnegative")
        if np.any(vals > bound * (1 + 1e-12)):
            raise ValueError(f"density exceeds its declared bound {bound}")
        return vals

    return checked


def random_design(n: int, dim: int, density: Optional[Density] = None, bound: float = 1.0) -> DesignSpec:
    if n < 1 or dim < 1:
        raise ValueError("n and dim must be positive")
    if bound <= 0:
        raise ValueError("density bound must be positive")
    return DesignSpec("random", dim, n, density=density, density_bound=float(bound))


def sample_random_design(
    n: int,
    density: Optional[Density],
    seed: int,
    dim: int = 1,
    bound: float = 1.0,
) -> np.ndarray:
    """``n`` i.i.d. points by rejection against the uniform proposal on [0,1]^dim."""
    if n < 1:
        raise ValueError("n must be at least 1")
    dens = _validated_density(density, bound)
    calib = make_rng(seed, 99).random((10_000, dim))
    rate = float(np.mean(dens(calib))) / bound
    if rate < 1.0 / (10.0 * bound):
        raise ValueError(f"acceptance rate {rate:.4g} below 1/(10M); density bound looks misdeclared")

    rng = make_rng(seed, 0)
    out = []
    have = 0
    while have < n:
        batch = int((n - have) / max(rate, 1e-3) * 1.2) + 16
        prop = rng.random((batch, dim))
        keep = prop[rng.random(batch) * bound < dens(prop)]
        out.append(keep)
        have += len(keep)
    return np.concatenate(out)[:n]


@dataclass(frozen=True)
class Dataset:
    """Design points and responses; lattice datasets are stored in row-major grid order."""

    design: DesignSpec
    points: np.ndarray
    responses: np.ndarray
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != self.design.dim:
            raise ValueError("points must be an (n, d) array")
        if not (len(self.points) == len(self.responses) == self.design.total_n):
            raise ValueError("points, responses and total_n disagree")

    @property
    def n(self) -> int:
        return len(self.responses)

    @property
    def dim(self) -> int:
        return self.design.dim

    @property
    def is_lattice(self) -> bool:
        return self.design.is_lattice

    def grid_responses(self) -> np.ndarray:
        """Responses reshaped to the lattice (``n_1 x ... x n_d``)."""
        return self.responses.reshape(self.design.lattice_sizes)

    def with_responses(self, y) -> "Dataset":
        return Dataset(self.design, self.points, np.asarray(y, dtype=float), self.sigma)


def generate_dataset(spec: DesignSpec, f, sigma: float, seed: int) -> Dataset:
    """Responses ``f(X_i) + sigma * N(0, 1)``; ``f`` is a TestFunction or a vectorised callable."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if spec.is_lattice:
        pts = spec.grid_points()
    else:
        pts = sample_random_design(spec.total_n, spec.density, seed, spec.dim, spec.density_bound)
    values = np.asarray(f(pts), dtype=float).reshape(len(pts))
    noise = make_rng(seed, 1).standard_normal(len(pts))
    return Dataset(spec, pts, values + sigma * noise, sigma=sigma)


def dataset_from_points(points, responses, sigma: Optional[float] = None) -> Dataset:
    """Wrap arbitrary points; a full Cartesian product is recognised as a lattice."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    y = np.asarray(responses, dtype=float).reshape(len(pts))
    axes = [np.unique(pts[:, k]) for k in range(pts.shape[1])]
    if int(np.prod([a.size for a in axes])) == len(pts):
        spec = lattice_from_axes(axes)
        idx = tuple(np.searchsorted(axes[k], pts[:, k]) for k in range(pts.shape[1]))
        flat = np.ravel_multi_index(idx, spec.lattice_sizes)
        if np.unique(flat).size == len(pts):
            order = np.argsort(flat)
            return Dataset(spec, pts[order], y[order], sigma)
    return Dataset(random_design(len(pts), pts.shape[1]), pts, y, sigma)


def write_dataset_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x_{k + 1}" for k in range(ds.dim)] + ["y"])
        for p, y in zip(ds.points, ds.responses):
            w.writerow([f"{v:.17g}" for v in p] + [f"{y:.17g}"])


def read_dataset_csv(path) -> Dataset:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty CSV")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header[-1] != "y" or header[:-1] != [f"x_{k + 1}" for k in range(d)]:
        raise ValueError("CSV header must be x_1..x_d,y")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        raise ValueError("CSV has no data rows")
    return dataset_from_points(data[:, :d], data[:, d])
