"""Monte Carlo for the sup-inf limit laws of the block estimator.

The Gaussian field ``G(h1, h2)`` on pairs of nonnegative vectors has covariance
``prod_k (min(h1_k, h1'_k) + min(h2_k, h2'_k))`` over the effective axes. It is
realised as a sum of ``2^{d*}`` independent Brownian sheets, sheet ``i`` read at
the corner that takes axis ``k`` from ``h1`` or ``h2`` according to ``i_k``.
Sheets are exact on the knot grid: independent Gaussian cell increments with
variance equal to the cell volume, accumulated along every axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np
from scipy.spatial import ConvexHull

from .design import make_rng
from .rates import INF, SmoothnessProfile, balanced_beta, k_constant, kappa_star_argmax, parse_alpha
from .exceptions import NonFiniteField


@dataclass(frozen=True)
class SupInfConfig:
    """Grid and drift for one sup-inf statistic.

    ``alpha`` is in canonical order (active coordinates first). Axes before
    ``kappa_star`` (1-based) do not enter. Active effective axes use geometric
    knots on ``[c**-gamma_star, c]``; inactive ones are capped by ``x0_k`` on the
    lower side and ``1 - x0_k`` on the upper side. ``drift="dalpha"`` uses unit
    marginal coefficients; ``drift="full"`` takes ``coefficients`` ``{j: a_j}``
    over the critical slice, with ``a_j = d^j f0(x0) / (j+1)!``.
    """

    alpha: tuple
    kappa_star: int = 1
    c: float = 8.0
    gamma_star: float = 2.0
    m: int = 48
    x0: Optional[tuple] = None
    drift: str = "dalpha"
    coefficients: Optional[Dict[tuple, float]] = field(default=None, compare=False)

    def __post_init__(self):
        alpha = parse_alpha(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        d = len(alpha)
        x0 = tuple([0.5] * d) if self.x0 is None else tuple(float(v) for v in self.x0)
        object.__setattr__(self, "x0", x0)
        if len(x0) != d:
            raise ValueError("x0 must have length d")
        if not 1 <= self.kappa_star <= d:
            raise ValueError("kappa_star must lie in 1..d")
        if not self.c > 1:
            raise ValueError("truncation radius c must exceed 1")
        if not self.c ** (-self.gamma_star) < self.c:
            raise ValueError("need c**-gamma_star < c")
        if self.m < 8:
            raise ValueError("need at least 8 knots per axis")
        if self.drift not in ("dalpha", "full"):
            raise ValueError("drift must be 'dalpha' or 'full'")
        if self.drift == "full" and not self.coefficients:
            raise ValueError("full drift needs coefficients")
        for k in self.effective_axes:
            if k >= self.s:
                lo = self.c ** (-self.gamma_star)
                if min(x0[k], 1 - x0[k]) <= lo:
                    raise ValueError("boundary caps must exceed the inner cutoff")

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def s(self) -> int:
        return sum(1 for a in self.alpha if a != INF)

    @property
    def effective_axes(self) -> tuple:
        return tuple(range(self.kappa_star - 1, self.d))

    @property
    def d_star(self) -> int:
        return self.d - self.kappa_star + 1

    def knots(self, side: int, k: int) -> np.ndarray:
        """Knots for ``h1`` (side 0) or ``h2`` (side 1) along canonical axis ``k``."""
        lo = self.c ** (-self.gamma_star)
        if k < self.s:
            hi = self.c
        else:
            hi = min(self.c, self.x0[k] if side == 0 else 1 - self.x0[k])
        return np.geomspace(lo, hi, self.m)

    def with_grid(self, **kw) -> "SupInfConfig":
        vals = {f: getattr(self, f) for f in self.__dataclass_fields__}
        vals.update(kw)
        return SupInfConfig(**vals)


@dataclass(frozen=True)
class LimitSample:
    """One sup-inf draw with the grid that produced it."""

    value: float
    seed: int
    replicate: int
    c: float
    gamma_star: float
    m: int
    scale: float = 1.0


@dataclass(frozen=True)
class SheetField:
    d_star: int
    grid: tuple  # grid[side][j]: knots of h1 (side 0) or h2 (side 1) on effective axis j
    values: np.ndarray  # shape (m,)*d_star + (m,)*d_star: G(h1, h2)
    seed: Optional[int] = None


def _layout(d_star: int, pos: int, arr: np.ndarray) -> np.ndarray:
    shape = [1] * (2 * d_star)
    shape[pos] = -1
    return arr.reshape(shape)


def g_covariance(h1, h2, h1p, h2p) -> float:
    """Closed-form ``Cov(G(h1,h2), G(h1',h2'))`` over the supplied (effective) axes."""
    h1, h2, h1p, h2p = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (h1, h2, h1p, h2p))
    return float(np.prod(np.minimum(h1, h1p) + np.minimum(h2, h2p)))


def _brownian_sheet(rng: np.random.Generator, grids: Sequence[np.ndarray]) -> np.ndarray:
    widths = [np.diff(np.concatenate(([0.0], g))) for g in grids]
    var = widths[0]
    for w in widths[1:]:
        var = np.multiply.outer(var, w)
    b = rng.standard_normal(var.shape) * np.sqrt(var)
    for ax in range(b.ndim):
        b = np.cumsum(b, axis=ax)
    return b


def sample_sheet(config: SupInfConfig, seed: Union[int, np.random.Generator]) -> SheetField:
    """One realisation of ``G`` on the knot grid of ``config``."""
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    eff = config.effective_axes
    ds = len(eff)
    knots = tuple(tuple(config.knots(side, k) for k in eff) for side in (0, 1))
    total = 0.0
    for pattern in itertools.product((0, 1), repeat=ds):
        grids = [knots[side][j] for j, side in enumerate(pattern)]
        sheet = _brownian_sheet(rng, grids)
        # move sheet axis j to slot j (h1 side) or ds + j (h2 side)
        src = list(range(ds))
        dst = [j if side == 0 else ds + j for j, side in enumerate(pattern)]
        expanded = sheet.reshape(sheet.shape + (1,) * ds)
        placeholder = [p for p in range(2 * ds) if p not in dst]
        total = total + np.moveaxis(expanded, src + list(range(ds, 2 * ds)), dst + placeholder)
    return SheetField(ds, knots, np.asarray(total), seed if isinstance(seed, int) else None)


def _grid_terms(config: SupInfConfig, knots):
    """Denominator ``prod (h1+h2)`` and drift on the knot grid."""
    eff = config.effective_axes
    ds = len(eff)
    h1 = [_layout(ds, j, knots[0][j]) for j in range(ds)]
    h2 = [_layout(ds, ds + j, knots[1][j]) for j in range(ds)]
    denom = 1.0
    for a, b in zip(h1, h2):
        denom = denom * (a + b)
    drift = 0.0
    if config.drift == "dalpha":
        for j, k in enumerate(eff):
            a = config.alpha[k]
            if a != INF:
                drift = drift + (h2[j] ** (a + 1) - h1[j] ** (a + 1)) / (h1[j] + h2[j])
    else:
        for jvec, coef in config.coefficients.items():
            if any(jvec[k] for k in range(config.kappa_star - 1)):
                continue
            term = coef
            for j, k in enumerate(eff):
                if k < config.s and jvec[k]:
                    p = jvec[k] + 1
                    term = term * (h2[j] ** p - (-h1[j]) ** p) / (h1[j] + h2[j])
            drift = drift + term
    return denom, drift


def sup_inf_statistic(fld: SheetField, config: SupInfConfig, _terms=None) -> float:
    """``max over h1 knots of min over h2 knots of G/prod(h1+h2) + drift``."""
    denom, drift = _terms if _terms is not None else _grid_terms(config, fld.grid)
    u = fld.values / denom + drift
    u = np.broadcast_to(u, fld.values.shape)
    if not np.all(np.isfinite(u)):
        raise NonFiniteField("non-finite value in the sup-inf field")
    n1 = int(np.prod(u.shape[: fld.d_star]))
    return float(u.reshape(n1, -1).min(axis=1).max())


def _profile_config(profile: SmoothnessProfile, beta, design: str, base: Optional[SupInfConfig]):
    rep = kappa_star_argmax(profile.alpha, beta, design)
    if not rep.unique:
        raise ValueError("effective dimension is not unique; the limit law is not identified")
    perm = rep.permutation
    alpha = tuple(profile.alpha[p] for p in perm)
    x0 = tuple(profile.x0[p] for p in perm)
    grid = {} if base is None else {"c": base.c, "gamma_star": base.gamma_star, "m": base.m}
    if profile.has_mixed():
        coefs = {tuple(j[p] for p in perm): v for j, v in profile.coefficients().items()}
        cfg = SupInfConfig(alpha, rep.kappa_star, x0=x0, drift="full", coefficients=coefs, **grid)
        return cfg, 1.0
    scale = k_constant(profile, rep.kappa_star, perm, design)
    return SupInfConfig(alpha, rep.kappa_star, x0=x0, **grid), scale


def sample_limit_distribution(
    source: Union[SmoothnessProfile, Sequence],
    M: int,
    config: Optional[SupInfConfig] = None,
    seed: int = 0,
    beta: Optional[Sequence] = None,
    design: str = "lattice",
) -> np.ndarray:
    """``M`` independent sup-inf draws.

    With a profile: the full drift when critical mixed derivatives are present,
    otherwise ``K * D_alpha``. With a bare ``alpha``: ``D_alpha`` on ``config``.
    Replicate ``r`` uses the substream ``(seed, r)``.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    if isinstance(source, SmoothnessProfile):
        if beta is None and design == "lattice":
            beta = balanced_beta(source.dim)
        cfg, scale = _profile_config(source, beta, design, config)
    else:
        alpha = parse_alpha(source)
        cfg = config.with_grid(alpha=alpha) if config is not None else SupInfConfig(alpha)
        scale = 1.0
    return np.array([d.value for d in _draws(cfg, scale, M, seed)])


def _draws(cfg: SupInfConfig, scale: float, M: int, seed: int):
    knots = tuple(tuple(cfg.knots(side, k) for k in cfg.effective_axes) for side in (0, 1))
    terms = _grid_terms(cfg, knots)
    for r in range(M):
        fld = sample_sheet(cfg, make_rng(seed, r))
        yield LimitSample(scale * sup_inf_statistic(fld, cfg, terms), seed, r, cfg.c, cfg.gamma_star, cfg.m, scale)


def draw_limit_samples(config: SupInfConfig, M: int, seed: int = 0, scale: float = 1.0) -> list:
    """Like :func:`sample_limit_distribution` on an explicit config, keeping per-draw metadata."""
    return list(_draws(config, scale, M, seed))


def refinement_diagnostic(alpha, M: int, config: Optional[SupInfConfig] = None, seed: int = 0) -> dict:
    """Median of the sup-inf draws at ``m`` and ``2m`` knots per axis."""
    cfg = config if config is not None else SupInfConfig(parse_alpha(alpha))
    coarse = sample_limit_distribution(alpha, M, cfg, seed)
    fine = sample_limit_distribution(alpha, M, cfg.with_grid(m=2 * cfg.m), seed)
    return {"m": cfg.m, "median_m": float(np.median(coarse)), "median_2m": float(np.median(fine)),
            "shift": float(np.median(fine) - np.median(coarse))}


# --- univariate cross-check: slope at zero of the greatest convex minorant ---

def lower_convex_hull(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the lower hull of points sorted by ``t`` (monotone chain)."""
    hull: list = []
    for i in range(len(t)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (t[b] - t[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (t[i] - t[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def greatest_convex_minorant(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """GCM of the piecewise-linear interpolant of ``(t, y)``, evaluated at ``t``."""
    h = lower_convex_hull(t, y)
    return np.interp(t, t[h], y[h])


def _qhull_lower(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    hull = ConvexHull(np.column_stack((t, y)))
    lower = hull.equations[:, 1] < 0
    return np.unique(hull.simplices[lower])


def gcm_slope_at(t: np.ndarray, y: np.ndarray, at: float = 0.0, engine: str = "qhull") -> float:
    """Slope of the greatest convex minorant on the segment covering ``at``."""
    h = _qhull_lower(t, y) if engine == "qhull" else lower_convex_hull(t, y)
    th = t[h]
    i = int(np.searchsorted(th, at, "right")) - 1
    i = min(max(i, 0), len(h) - 2)
    a, b = h[i], h[i + 1]
    return float((y[b] - y[a]) / (t[b] - t[a]))


def chernoff_grid(T: float, step: float) -> np.ndarray:
    """Symmetric time grid on ``[-T, T]`` at half-step offsets, so 0 is never a node."""
    n = int(round(T / step))
    return (np.arange(-n, n) + 0.5) * step


def brownian_two_sided(rng: np.random.Generator, t: np.ndarray) -> np.ndarray:
    """Two-sided standard Brownian motion, ``B(0) = 0``, on a grid symmetric about 0."""
    pos = t[t > 0]
    neg = -t[t < 0][::-1]
    def one_side(times):
        inc = rng.standard_normal(len(times)) * np.sqrt(np.diff(np.concatenate(([0.0], times))))
        return np.cumsum(inc)
    right = one_side(pos)
    left = one_side(neg)[::-1]
    return np.concatenate((left, right))


def chernoff_sample(M: int, T: float = 8.0, step: float = 0.01, seed: int = 0, sign: float = 1.0) -> np.ndarray:
    """``M`` draws of the slope at 0 of the GCM of ``t -> B(t) + t^2`` on ``[-T, T]``.

    ``sign=-1`` drives the same seeds with ``-B``.
    """
    if T < 4:
        raise ValueError("horizon T must be at least 4")
    if not 0 < step <= 0.05:
        raise ValueError("grid step must be in (0, 0.05]")
    t = chernoff_grid(T, step)
    drift = t**2
    out = np.empty(M)
    for r in range(M):
        b = brownian_two_sided(make_rng(seed, r), t)
        out[r] = gcm_slope_at(t, sign * b + drift, 0.0)
    return out
