"""Local rate calculus: index sets, effective dimension, effective sample size, K.

Smoothness exponents are odd integers for active coordinates and ``math.inf``
for coordinates the regression function does not locally depend on; ``1/inf``
is taken to be 0 throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from .exceptions import DegenerateBoundary, MixedDerivativesPresent

INF = math.inf
_TIE_TOL = 1e-12


def _is_finite(a) -> bool:
    return not (isinstance(a, float) and math.isinf(a))


def parse_alpha(alpha: Sequence) -> Tuple:
    out = []
    for a in alpha:
        if isinstance(a, str):
            a = a.strip().lower()
            a = INF if a in ("inf", "infinity", "oo") else int(a)
        if _is_finite(a):
            if int(a) != a or a < 1:
                raise ValueError(f"smoothness exponents must be positive integers or inf, got {a}")
            a = int(a)
        out.append(a)
    return tuple(out)


def _inv(a):
    return Fraction(0) if not _is_finite(a) else Fraction(1, a)


def _exact(beta) -> bool:
    return beta is not None and all(isinstance(b, (Fraction, int)) for b in beta)


def _num(x, exact: bool):
    return Fraction(x) if exact else float(x)


@dataclass(frozen=True)
class SmoothnessProfile:
    """Local structure of ``f0`` at ``x0``.

    ``marginal_derivs[k]`` is ``d^alpha_k f0 / dx_k^alpha_k`` at ``x0`` for the
    active coordinates (``nan`` where alpha is infinite); ``mixed_derivs`` maps
    critical-order multi-indices with at least two nonzero entries to their
    derivative values.
    """

    x0: tuple
    alpha: tuple
    marginal_derivs: tuple
    mixed_derivs: Dict[tuple, float] = field(default_factory=dict)
    density_at_x0: float = 1.0

    def __post_init__(self):
        alpha = parse_alpha(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        object.__setattr__(self, "marginal_derivs", tuple(float(v) for v in self.marginal_derivs))
        object.__setattr__(self, "mixed_derivs", {tuple(int(i) for i in k): float(v) for k, v in self.mixed_derivs.items()})
        d = len(alpha)
        if len(self.x0) != d or len(self.marginal_derivs) != d:
            raise ValueError("x0, alpha and marginal_derivs must all have length d")
        for a, der in zip(alpha, self.marginal_derivs):
            if _is_finite(a):
                if a % 2 == 0:
                    raise ValueError(f"active smoothness exponents must be odd, got {a}")
                if not der > 0:
                    raise ValueError("marginal derivatives of active coordinates must be positive")
        for j in self.mixed_derivs:
            if len(j) != d or sum(1 for v in j if v) < 2:
                raise ValueError(f"mixed index {j} must have length d and at least two nonzero entries")
            if any(v and not _is_finite(a) for v, a in zip(j, alpha)):
                raise ValueError(f"mixed index {j} touches an inactive coordinate")
            if sum(Fraction(v) * _inv(a) for v, a in zip(j, alpha)) != 1:
                raise ValueError(f"mixed index {j} is not of critical order")
        if not self.density_at_x0 > 0:
            raise ValueError("density at x0 must be positive")

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @property
    def s(self) -> int:
        return sum(1 for a in self.alpha if _is_finite(a))

    def has_mixed(self) -> bool:
        return any(v != 0 for v in self.mixed_derivs.values())

    def coefficients(self) -> Dict[tuple, float]:
        """Drift coefficients ``d^j f0(x0) / (j+1)!`` over the critical slice."""
        d = self.dim
        out = {}
        for k, a in enumerate(self.alpha):
            if _is_finite(a):
                j = tuple(a if i == k else 0 for i in range(d))
                out[j] = self.marginal_derivs[k] / math.factorial(a + 1)
        for j, v in self.mixed_derivs.items():
            out[j] = v / math.prod(math.factorial(x + 1) for x in j)
        return out


def index_sets(alpha: Sequence, s: Optional[int] = None):
    """Multi-index sets ``J`` (0 < weight <= 1), ``J*`` (weight = 1) and ``J1`` (mixed part of ``J*``).

    The weight of ``j`` is ``sum_k j_k / alpha_k`` over the active coordinates.
    """
    alpha = parse_alpha(alpha)
    active = [k for k, a in enumerate(alpha) if _is_finite(a)]
    if s is None:
        s = len(active)
    if s != len(active):
        raise ValueError("s must equal the number of finite exponents")
    if s == 0:
        raise ValueError("no active coordinates: J is empty by convention")
    d = len(alpha)
    J, J_star = [], []
    for combo in itertools.product(*(range(alpha[k] + 1) for k in active)):
        w = sum(Fraction(c, alpha[k]) for c, k in zip(combo, active))
        if 0 < w <= 1:
            j = [0] * d
            for c, k in zip(combo, active):
                j[k] = c
            J.append(tuple(j))
            if w == 1:
                J_star.append(tuple(j))
    J1 = [j for j in J_star if sum(1 for v in j if v) > 1]
    return {"J": sorted(J), "J_star": sorted(J_star), "J1": sorted(J1)}


def canonical_order(alpha: Sequence, beta: Optional[Sequence] = None) -> Tuple[int, ...]:
    """Permutation sorting coordinates by ``alpha_k * beta_k`` (stable)."""
    alpha = parse_alpha(alpha)
    if beta is None:
        keys = [INF if not _is_finite(a) else a for a in alpha]
    else:
        keys = [INF if not _is_finite(a) else a * float(b) for a, b in zip(alpha, beta)]
    return tuple(sorted(range(len(alpha)), key=lambda k: keys[k]))


@dataclass(frozen=True)
class RateReport:
    kappa_star: int
    unique: bool
    effective_dims: tuple
    n_star_exponent: float
    rate_exponent: float
    denominator: float
    design: str
    permutation: tuple
    objective: tuple = ()
    K: Optional[float] = None

    def omega_n(self, n: float, sigma: float = 1.0) -> float:
        """Local rate ``(n*/sigma^2)^(-1/(2 + sum 1/alpha))``."""
        n_star = float(n) ** self.n_star_exponent
        return (n_star / sigma**2) ** (-1.0 / self.denominator)

    def n_star(self, n: float) -> float:
        return float(n) ** self.n_star_exponent

    def to_dict(self) -> dict:
        return {
            "kappa_star": self.kappa_star,
            "unique": self.unique,
            "effective_dims": list(self.effective_dims),
            "n_star_exponent": float(self.n_star_exponent),
            "rate_exponent": float(self.rate_exponent),
            "denominator": float(self.denominator),
            "design": self.design,
            "permutation": list(self.permutation),
            "objective": [float(v) for v in self.objective],
            "K": self.K,
        }


def _ordered(alpha, beta):
    perm = canonical_order(alpha, beta)
    a = tuple(alpha[k] for k in perm)
    b = None if beta is None else tuple(beta[k] for k in perm)
    return perm, a, b


def kappa_star_argmax(alpha: Sequence, beta: Optional[Sequence] = None, design: str = "lattice") -> RateReport:
    """Effective dimension as the maximiser of ``sum_{k>=l} beta_k / (2 + sum_{k=l}^s 1/alpha_k)``.

    Indices in the report (``kappa_star``, ``effective_dims``) are 1-based and
    refer to the canonical ordering; ``permutation[i]`` is the original
    coordinate placed at position ``i``. Ties leave ``unique=False`` and report
    the smallest maximiser.
    """
    alpha = parse_alpha(alpha)
    d = len(alpha)
    if design == "random":
        perm = canonical_order(alpha)
        denom = 2 + sum(_inv(a) for a in alpha)
        return RateReport(1, True, tuple(range(1, d + 1)), 1.0, float(1 / denom), float(denom),
                          "random", perm, (float(1 / denom),))
    if design != "lattice":
        raise ValueError("design must be 'lattice' or 'random'")
    if beta is None or len(beta) != d:
        raise ValueError("lattice designs need a beta vector of length d")
    if any(float(b) <= 0 for b in beta):
        raise ValueError("beta entries must be positive")
    exact = _exact(beta)
    perm, a, b = _ordered(alpha, beta)
    objective = []
    for l in range(d):
        num = sum(_num(x, exact) for x in b[l:])
        den = 2 + sum(_inv(x) for x in a[l:])
        objective.append(num / (den if exact else float(den)))
    best = max(objective)
    tol = 0 if exact else _TIE_TOL
    winners = [l for l, v in enumerate(objective) if best - v <= tol]
    k = winners[0]
    nse = sum(_num(x, exact) for x in b[k:])
    den = 2 + sum(_inv(x) for x in a[k:])
    return RateReport(
        kappa_star=k + 1,
        unique=len(winners) == 1,
        effective_dims=tuple(range(k + 1, d + 1)),
        n_star_exponent=float(nse),
        rate_exponent=float(nse / (den if exact else float(den))),
        denominator=float(den),
        design="lattice",
        permutation=perm,
        objective=tuple(float(v) for v in objective),
    )


def kappa_star_fixed_point(alpha: Sequence, beta: Sequence) -> int:
    """Effective dimension via the first index where the bias/variance balance tips.

    Returns ``min{l : (1/alpha_l)/(2 + sum_{k=l}^s 1/alpha_k) < beta_l / sum_{k>=l} beta_k}``
    (1-based, canonical order). Raises ``DegenerateBoundary`` on equality at any ``l``.
    """
    alpha = parse_alpha(alpha)
    exact = _exact(beta)
    _, a, b = _ordered(alpha, beta)
    d = len(a)
    found = None
    for l in range(d):
        lhs = _inv(a[l]) / (2 + sum(_inv(x) for x in a[l:]))
        rhs = _num(b[l], exact) / sum(_num(x, exact) for x in b[l:])
        if not exact:
            lhs = float(lhs)
        if (lhs == rhs) if exact else abs(lhs - rhs) <= _TIE_TOL:
            raise DegenerateBoundary(f"balance equality at coordinate {l + 1}")
        if found is None and lhs < rhs:
            found = l + 1
    return found


def k_constant(profile: SmoothnessProfile, kappa_star: int = 1, permutation: Optional[Sequence[int]] = None,
               design: str = "lattice") -> float:
    """Local constant ``{prod_k (D_k / (alpha_k+1)!)^(1/alpha_k)}^(1/(2 + sum 1/alpha_k))``.

    The product runs over active coordinates at canonical positions
    ``>= kappa_star``. For a random design with every coordinate active the
    value absorbs ``density_at_x0 ** (-1/(2 + sum 1/alpha_k))``.
    """
    if profile.has_mixed():
        raise MixedDerivativesPresent(
            "critical mixed derivatives are nonzero; sample the full limit process instead")
    d = profile.dim
    perm = tuple(range(d)) if permutation is None else tuple(permutation)
    effective = perm[kappa_star - 1:]
    log_prod = 0.0
    inv_sum = 0.0
    for k in effective:
        a = profile.alpha[k]
        if _is_finite(a):
            log_prod += math.log(profile.marginal_derivs[k] / math.factorial(a + 1)) / a
            inv_sum += 1.0 / a
    denom = 2.0 + inv_sum
    K = math.exp(log_prod / denom)
    if design == "random" and profile.s == d:
        K *= profile.density_at_x0 ** (-1.0 / denom)
    return K


def rate_report(profile: SmoothnessProfile, beta: Optional[Sequence] = None, design: str = "lattice") -> RateReport:
    """Rate report for ``profile`` with ``K`` filled in whenever it factors."""
    rep = kappa_star_argmax(profile.alpha, beta, design)
    K = None
    if not profile.has_mixed():
        K = k_constant(profile, rep.kappa_star, rep.permutation, design)
    return RateReport(**{**rep.__dict__, "K": K})


def balanced_beta(d: int) -> tuple:
    return tuple(Fraction(1, d) for _ in range(d))
