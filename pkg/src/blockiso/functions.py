"""Monotone test functions with their local smoothness declared at a reference point."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .design import make_rng
from .rates import INF, SmoothnessProfile, parse_alpha


@dataclass(frozen=True)
class TestFunction:
    """A coordinate-wise nondecreasing ``f: [0,1]^d -> R`` plus its local structure at ``x0``."""

    __test__ = False  # not a pytest class

    id: str
    evaluator: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    x0: tuple
    alpha: tuple
    marginal_derivs: tuple
    mixed_derivs: Dict[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @property
    def s(self) -> int:
        return sum(1 for a in self.alpha if a != INF)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim)
        return np.asarray(self.evaluator(pts), dtype=float)

    def value_at(self, x) -> float:
        return float(self(np.asarray(x, dtype=float).reshape(1, -1))[0])

    @property
    def derivative_table(self) -> Dict[tuple, float]:
        """``{j: d^j f(x0)}`` over the marginal critical indices and declared mixed ones."""
        table = {}
        for k, a in enumerate(self.alpha):
            if a != INF:
                table[tuple(a if i == k else 0 for i in range(self.dim))] = self.marginal_derivs[k]
        table.update(self.mixed_derivs)
        return table

    def profile(self, density_at_x0: float = 1.0) -> SmoothnessProfile:
        return SmoothnessProfile(self.x0, self.alpha, self.marginal_derivs, dict(self.mixed_derivs), density_at_x0)

    def is_monotone(self, n_pairs: int = 1000, seed: int = 0, tol: float = 1e-12) -> bool:
        """Check ``f(x) <= f(y)`` on random ordered pairs ``x <= y``."""
        rng = make_rng(seed)
        x = rng.random((n_pairs, self.dim))
        y = x + rng.random((n_pairs, self.dim)) * (1 - x)
        return bool(np.all(self(x) <= self(y) + tol))


def taylor_model(profile: SmoothnessProfile, value_at_x0: float = 0.0, name: str = "taylor") -> TestFunction:
    """Local polynomial ``f0(x0) + sum_j d^j f0(x0)/j! (x - x0)^j`` over the critical slice.

    Monotone when no mixed terms are present (odd powers, positive coefficients).
    """
    x0 = np.asarray(profile.x0)
    terms = []
    for k, a in enumerate(profile.alpha):
        if a != INF:
            j = tuple(a if i == k else 0 for i in range(profile.dim))
            terms.append((np.array(j), profile.marginal_derivs[k] / math.factorial(a)))
    for j, v in profile.mixed_derivs.items():
        terms.append((np.array(j), v / math.prod(math.factorial(x) for x in j)))

    def f(pts):
        dx = pts - x0
        out = np.full(len(pts), float(value_at_x0))
        for j, c in terms:
            out += c * np.prod(dx**j, axis=1)
        return out

    return TestFunction(name, f, profile.x0, profile.alpha, profile.marginal_derivs, dict(profile.mixed_derivs))


_HALF = (0.5, 0.5)
_E = math.e


def _f3(p):
    x1, x2 = p[:, 0], p[:, 1]
    return np.where(x1 <= 0.25, x1 + x2, np.where(x1 < 0.75, 8 * x1, 8 * (x1 + x2)))


def _f5(p):
    a, b = p[:, 0] - 0.5, p[:, 1] - 0.5
    return a**3 + a**2 * b + a * b**2 + b**3


REGISTRY: Dict[str, TestFunction] = {
    "F1": TestFunction("F1", lambda p: p[:, 0] + p[:, 1], _HALF, (1, 1), (1.0, 1.0)),
    "F2": TestFunction("F2", lambda p: p[:, 0], _HALF, (1, INF), (1.0, math.nan)),
    "F3": TestFunction("F3", _f3, _HALF, (1, INF), (8.0, math.nan)),
    "F4": TestFunction("F4", lambda p: (p[:, 0] - 0.5) ** 3 + (p[:, 1] - 0.5) ** 3, _HALF, (3, 3), (6.0, 6.0)),
    "F5": TestFunction("F5", _f5, _HALF, (3, 3), (6.0, 6.0), {(2, 1): 2.0, (1, 2): 2.0}),
    # pair used in the d=2 simulation study; the second is the linearisation of the first at x0
    "sim_f1": TestFunction("sim_f1", lambda p: np.exp(p[:, 0] + p[:, 1]), _HALF, (1, 1), (_E, _E)),
    "sim_f2": TestFunction("sim_f2", lambda p: _E * (p[:, 0] + p[:, 1]), _HALF, (1, 1), (_E, _E)),
    "identity1d": TestFunction("identity1d", lambda p: p[:, 0].copy(), (0.5,), (1,), (1.0,)),
}


def get_function(name: str) -> TestFunction:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown test function {name!r}; choose from {sorted(REGISTRY)}") from None


def constant_function(c: float, dim: int, x0: Optional[tuple] = None) -> TestFunction:
    x0 = x0 or tuple([0.5] * dim)
    return TestFunction(f"const{dim}", lambda p: np.full(len(p), float(c)), x0, (INF,) * dim, (math.nan,) * dim)
