"""Command-line entry point: ``blockiso <command> ...``.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .design import read_dataset_csv
from .estimator import fit_grid, max_min_estimate
from .exceptions import BlockIsoError, ConfigError, MixedDerivativesPresent, NotALattice, ZeroNoise
from .experiments import ExperimentConfig, render_outputs, run_cdf_experiment
from .functions import get_function, taylor_model
from .limit import SupInfConfig, chernoff_sample, sample_limit_distribution
from .minimax import certify_rate_optimality
from .rates import SmoothnessProfile, kappa_star_argmax, parse_alpha, rate_report

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list:
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _alpha(text: str) -> tuple:
    return parse_alpha([v for v in text.split(",") if v.strip()])


def _beta(text: str) -> tuple:
    return tuple(Fraction(v.strip()) for v in text.split(",") if v.strip())


def _json_arg(text: str):
    """Inline JSON or a path to a JSON file."""
    if not text.lstrip().startswith(("{", "[")):
        text = Path(text).read_text()
    return json.loads(text)


def _mixed(raw) -> dict:
    return {tuple(int(i) for i in str(k).split(",")): float(v) for k, v in (raw or {}).items()}


def _write_rows(path, header, rows):
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    finally:
        if path:
            fh.close()


def _emit_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_estimate(args):
    ds = read_dataset_csv(args.input)
    header = [f"x_{k + 1}" for k in range(ds.dim)] + ["fitted"]
    if args.grid:
        fitted = fit_grid(ds)
        rows = [list(p) + [v] for p, v in zip(ds.points, fitted)]
    else:
        if args.x0 is None:
            raise ConfigError("--x0 is required unless --grid is given")
        x0 = _floats(args.x0)
        rows = [x0 + [max_min_estimate(ds, x0).value]]
    _write_rows(args.output, header, rows)


def cmd_rates(args):
    alpha = _alpha(args.alpha)
    beta = _beta(args.beta) if args.beta else None
    if args.derivs:
        raw = _json_arg(args.derivs)
        prof = SmoothnessProfile(raw.get("x0", [0.5] * len(alpha)), alpha, raw["marginal"],
                                 _mixed(raw.get("mixed")), raw.get("density", 1.0))
        rep = rate_report(prof, beta, args.design)
    else:
        rep = kappa_star_argmax(alpha, beta, args.design)
    _emit_json(rep.to_dict())


def cmd_simulate_limit(args):
    coefs = _mixed(_json_arg(args.coefficients)) if args.coefficients else None
    cfg = SupInfConfig(_alpha(args.alpha), args.kappa, c=args.c, gamma_star=args.gamma_star, m=args.m,
                       drift=args.drift, coefficients=coefs)
    draws = sample_limit_distribution(cfg.alpha, args.M, cfg, args.seed)
    _emit_draws(draws, args.output)


def cmd_chernoff(args):
    _emit_draws(chernoff_sample(args.M, args.T, args.step, args.seed), args.output)


def _emit_draws(draws, path):
    if path:
        _write_rows(path, ["draw"], ([v] for v in draws))
    else:
        _emit_json({"M": int(draws.size), "mean": float(np.mean(draws)), "sd": float(np.std(draws, ddof=1)),
                    "quantiles": {str(q): float(np.quantile(draws, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)}})


def _profile_base(raw: dict):
    if "function" in raw:
        return get_function(raw["function"])
    alpha = parse_alpha(raw["alpha"])
    prof = SmoothnessProfile(raw.get("x0", [0.5] * len(alpha)), alpha, raw["marginal"],
                             _mixed(raw.get("mixed")), raw.get("density", 1.0))
    return taylor_model(prof, raw.get("value", 0.0))


def cmd_minimax(args):
    base = _profile_base(_json_arg(args.profile))
    report = certify_rate_optimality(base, _ints(args.n_list), args.sigma, args.seed, design=args.design)
    _emit_json(report, args.output)


def cmd_experiment(args):
    raw = _json_arg(args.config)
    if not isinstance(raw, dict):
        raise ConfigError("experiment config must be a JSON object")
    cfg = ExperimentConfig.from_dict(raw)
    outputs = render_outputs(cfg, run_cdf_experiment(cfg))
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in outputs.items():
        (out / name).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockiso", description="Max-min block estimation for isotonic regression.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("estimate", help="fit the estimator to a CSV dataset")
    s.add_argument("--input", required=True)
    s.add_argument("--x0", help="query point, comma separated")
    s.add_argument("--grid", action="store_true", help="fit at every lattice node")
    s.add_argument("--output")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("rates", help="effective dimension, rate exponent and local constant")
    s.add_argument("--alpha", required=True, help="e.g. 1,3,inf")
    s.add_argument("--beta", help="lattice exponents, e.g. 1/2,1/2")
    s.add_argument("--design", choices=("lattice", "random"), default="lattice")
    s.add_argument("--derivs", help="JSON (inline or file): marginal, mixed, x0, density")
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("simulate-limit", help="Monte Carlo draws of the sup-inf limit statistic")
    s.add_argument("--alpha", required=True)
    s.add_argument("--kappa", type=int, default=1)
    s.add_argument("--drift", choices=("dalpha", "full"), default="dalpha")
    s.add_argument("--coefficients", help="JSON {\"j1,j2\": a_j} for the full drift")
    s.add_argument("--M", type=int, default=1000)
    s.add_argument("--c", type=float, default=8.0)
    s.add_argument("--gamma-star", type=float, default=2.0)
    s.add_argument("--m", type=int, default=48)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output")
    s.set_defaults(func=cmd_simulate_limit)

    s = sub.add_parser("chernoff", help="greatest-convex-minorant slope draws")
    s.add_argument("--M", type=int, default=1000)
    s.add_argument("--T", type=float, default=8.0)
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output")
    s.set_defaults(func=cmd_chernoff)

    s = sub.add_parser("minimax", help="two-point lower bound certificates")
    s.add_argument("--profile", required=True, help="JSON: {\"function\": id} or alpha/marginal/x0")
    s.add_argument("--n-list", required=True)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--design", choices=("lattice", "random"), default="lattice")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output")
    s.set_defaults(func=cmd_minimax)

    s = sub.add_parser("experiment", help="simulation study: cdf.csv, qq.csv, rates.csv, manifest.json")
    s.add_argument("--config", required=True)
    s.add_argument("--output-dir", required=True)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, ZeroNoise, MixedDerivativesPresent, NotALattice, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlockIsoError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
