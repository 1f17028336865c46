"""Simulation harness: scaled-error distributions, QQ pairs and log-log rate fits.

Noise for replicate ``r`` at size index ``i`` comes from the substream
``(seed, i, r)`` and is shared by every function in the config, so
between-function comparisons only see the function effect.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .blocks import build_prefix
from .design import Dataset, build_lattice, make_rng
from .estimator import max_min_estimate
from .exceptions import ConfigError, DegenerateFit
from .functions import REGISTRY, get_function
from .rates import balanced_beta, rate_report


@dataclass(frozen=True)
class ExperimentConfig:
    """What to simulate.

    ``lattice_sizes`` are points per side of a balanced lattice, so the sample
    size is ``side ** d``. ``rate_exponent`` defaults to the one implied by the
    first function's smoothness profile.
    """

    functions: tuple
    lattice_sizes: tuple
    B: int = 300
    sigma: float = 1.0
    seed: int = 0
    x0: Optional[tuple] = None
    rate_exponent: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "lattice_sizes", tuple(int(s) for s in self.lattice_sizes))
        if not self.functions:
            raise ConfigError("at least one function is required")
        unknown = [f for f in self.functions if f not in REGISTRY]
        if unknown:
            raise ConfigError(f"unknown functions {unknown}; choose from {sorted(REGISTRY)}")
        dims = {REGISTRY[f].dim for f in self.functions}
        if len(dims) != 1:
            raise ConfigError("all functions in one experiment must share a dimension")
        if not self.lattice_sizes or min(self.lattice_sizes) < 4:
            raise ConfigError("lattice sizes must be at least 4 per side")
        if self.B < 2:
            raise ConfigError("B must be at least 2")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ConfigError("sigma must be a finite nonnegative number")
        if self.x0 is not None:
            x0 = tuple(float(v) for v in self.x0)
            if len(x0) != self.dim or not all(0 < v < 1 for v in x0):
                raise ConfigError("x0 must be an interior point of matching dimension")
            object.__setattr__(self, "x0", x0)

    @property
    def dim(self) -> int:
        return REGISTRY[self.functions[0]].dim

    @property
    def query(self) -> tuple:
        return self.x0 if self.x0 is not None else REGISTRY[self.functions[0]].x0

    @property
    def exponent(self) -> float:
        if self.rate_exponent is not None:
            return float(self.rate_exponent)
        f = REGISTRY[self.functions[0]]
        return rate_report(f.profile(), balanced_beta(self.dim)).rate_exponent

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        allowed = set(cls.__dataclass_fields__)
        extra = set(raw) - allowed
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = asdict(self)
        out["functions"] = list(self.functions)
        out["lattice_sizes"] = list(self.lattice_sizes)
        if self.x0 is not None:
            out["x0"] = list(self.x0)
        return out


@dataclass
class ExperimentTable:
    """Long-form results: one row per (function, size, replicate)."""

    function: List[str] = field(default_factory=list)
    n: List[int] = field(default_factory=list)
    side: List[int] = field(default_factory=list)
    replicate: List[int] = field(default_factory=list)
    error: List[float] = field(default_factory=list)
    statistic: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.statistic)

    def select(self, function: str, n: Optional[int] = None, column: str = "statistic") -> np.ndarray:
        vals = getattr(self, column)
        return np.array([v for f, m, v in zip(self.function, self.n, vals)
                         if f == function and (n is None or m == n)])

    def sizes(self) -> list:
        return sorted(set(self.n))


def run_cdf_experiment(config: ExperimentConfig) -> ExperimentTable:
    """Fit the estimator at ``x0`` for every function, size and replicate.

    Records ``n**rate_exponent * (fhat(x0) - f(x0))``.
    """
    d = config.dim
    beta = balanced_beta(d)
    x0 = np.asarray(config.query, dtype=float)
    funcs = [get_function(f) for f in config.functions]
    r = config.exponent
    table = ExperimentTable()
    for i, side in enumerate(config.lattice_sizes):
        n = side**d
        spec = build_lattice(n, beta, x0)
        pts = spec.grid_points()
        means = [f(pts) for f in funcs]
        truth = [f.value_at(x0) for f in funcs]
        for rep in range(config.B):
            noise = make_rng(config.seed, i, rep).standard_normal(n) * config.sigma
            for f, mu, f_x0 in zip(funcs, means, truth):
                ds = Dataset(spec, pts, mu + noise, config.sigma)
                err = max_min_estimate(ds, x0, build_prefix(ds)).value - f_x0
                table.function.append(f.id)
                table.n.append(n)
                table.side.append(side)
                table.replicate.append(rep)
                table.error.append(err)
                table.statistic.append(n**r * err)
    return table


def ks_distance(sample_a, sample_b) -> float:
    """Two-sample Kolmogorov-Smirnov distance between empirical CDFs."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    return float(stats.ks_2samp(a, b).statistic)


@dataclass(frozen=True)
class RateFit:
    function: str
    slope: float
    stderr: float
    intercept: float
    n: tuple
    median_abs_error: tuple


def fit_log_slope(n: Sequence[float], med: Sequence[float], function: str = "") -> RateFit:
    """Least-squares slope of ``log med`` on ``log n``."""
    n = np.asarray(n, dtype=float)
    med = np.asarray(med, dtype=float)
    if n.size < 3:
        raise ValueError("a rate fit needs at least 3 sizes")
    if np.any(med <= 0) or not np.all(np.isfinite(med)):
        raise DegenerateFit("median absolute error is zero or non-finite at some size")
    res = stats.linregress(np.log(n), np.log(med))
    return RateFit(function, float(res.slope), float(res.stderr), float(res.intercept),
                   tuple(int(v) for v in n), tuple(float(v) for v in med))


def _fit_function(table: ExperimentTable, f: str) -> RateFit:
    sizes = table.sizes()
    med = [np.median(np.abs(table.select(f, n, "error"))) for n in sizes]
    return fit_log_slope(sizes, med, f)


def rate_fits(table: ExperimentTable) -> List[RateFit]:
    """Median-absolute-error rate fit per function in the table."""
    return [_fit_function(table, f) for f in dict.fromkeys(table.function)]


def rate_fit(config: ExperimentConfig) -> RateFit:
    """Simulate ``config`` and fit the rate for its first function."""
    if len(config.lattice_sizes) < 3:
        raise ConfigError("a rate fit needs at least 3 lattice sizes")
    single = ExperimentConfig.from_dict({**config.to_dict(), "functions": [config.functions[0]]})
    return rate_fits(run_cdf_experiment(single))[0]


def qq_pairs(table: ExperimentTable, a: str, b: str, n: int):
    """Matched order statistics of the scaled statistics of two functions at size ``n``."""
    qa = np.sort(table.select(a, n))
    qb = np.sort(table.select(b, n))
    if qa.size != qb.size:
        raise ValueError("QQ pairing needs equal replicate counts")
    p = (np.arange(1, qa.size + 1) - 0.5) / qa.size
    return p, qa, qb


def empirical_cdf(sample) -> tuple:
    x = np.sort(np.asarray(sample, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_outputs(config: ExperimentConfig, table: ExperimentTable) -> dict:
    """CSV/JSON payloads keyed by file name. Deterministic text for a given config."""
    cdf = _csv(["function", "n", "side", "replicate", "error", "statistic"],
               zip(table.function, table.n, table.side, table.replicate, table.error, table.statistic))
    qq_rows = []
    funcs = list(config.functions)
    for a, b in zip(funcs, funcs[1:]):
        for n in table.sizes():
            p, qa, qb = qq_pairs(table, a, b, n)
            qq_rows += [(a, b, n, pi, x, y) for pi, x, y in zip(p, qa, qb)]
    qq = _csv(["function_a", "function_b", "n", "p", "quantile_a", "quantile_b"], qq_rows)

    rate_rows = []
    fits, degenerate = {}, []
    if len(table.sizes()) >= 3:
        for f in funcs:
            try:
                fits[f] = _fit_function(table, f)
            except DegenerateFit:
                degenerate.append(f)
    for f in funcs:
        fit = fits.get(f)
        for n in table.sizes():
            med = float(np.median(np.abs(table.select(f, n, "error"))))
            rate_rows.append((f, n, med, fit.slope if fit else "", fit.stderr if fit else ""))
    rates = _csv(["function", "n", "median_abs_error", "slope", "slope_se"], rate_rows)

    manifest = {
        "config": config.to_dict(),
        "rate_exponent": config.exponent,
        "seeds": {"base": config.seed, "noise_stream": "(seed, size_index, replicate)"},
        "degenerate_rate_fits": degenerate,
        "rows": {"cdf.csv": len(table), "qq.csv": len(qq_rows), "rates.csv": len(rate_rows)},
        "versions": {"blockiso": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": __import__("scipy").__version__},
    }
    return {"cdf.csv": cdf, "qq.csv": qq, "rates.csv": rates,
            "manifest.json": json.dumps(manifest, indent=2, sort_keys=True) + "\n"}
