"""``bayesvar`` command line: exact measures, one-sample estimates, study, backtest."""

import argparse
import os
import sys

import numpy as np

from .distributions import BaselineModel, Family, sample
from .estimators import Method, estimate
from .exceptions import DataError
from .harness import (DEFAULT_SIZES, StudyGrid, fmt, historical_backtest, read_prices,
                      run_study, write_backtest, write_study)
from .mcmc import ChainConfig
from .risk import exact_risk

SEED_ENV = "BAYESVAR_SEED"
UNDEFINED = "undefined"


def default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV}={raw!r} is not an integer") from None


def _csv_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_generator(spec):
    """``exp:1``, ``normal:0,1``, ``cauchy:0,2``, ``gamma:2,1`` -> BaselineModel."""
    name, sep, rest = spec.partition(":")
    if not sep or not rest:
        raise ValueError(f"generator spec {spec!r} must look like family:p1[,p2]")
    try:
        params = tuple(float(v) for v in _csv_list(rest))
    except ValueError:
        raise ValueError(f"generator spec {spec!r} has a non-numeric parameter") from None
    return BaselineModel(Family.parse(name), params)


def read_sample(path):
    """One value per line; a non-numeric first line is taken as a header."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for row_no, line in enumerate(fh, start=1):
            field = line.split(",")[0].strip()
            if not field:
                continue
            try:
                values.append(float(field))
            except ValueError:
                if row_no == 1:
                    continue
                raise DataError(f"{path}: row {row_no}: {field!r} is not a number", row=row_no) from None
    if not values:
        raise DataError(f"{path}: no observations")
    return np.array(values)


def _chain_args(p):
    p.add_argument("--length", type=int, default=10000, help="chain length (default 10000)")
    p.add_argument("--burn-in", type=int, default=3000, help="discarded draws (default 3000)")
    p.add_argument("--thin", type=int, default=50, help="keep every k-th draw (default 50)")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")


def _level_args(p):
    p.add_argument("--p", type=float, default=0.95, help="risk level (default 0.95)")
    p.add_argument("--p-u", dest="p_u", type=float, default=0.9, help="threshold probability (default 0.9)")


def _cfg(args):
    return ChainConfig(length=args.length, burn_in=args.burn_in, thin=args.thin, seed=args.seed)


def _config_line(args, keys):
    # keep stdout a clean CSV when the table itself goes there
    stream = sys.stderr if getattr(args, "out", None) == "-" else sys.stdout
    items = " ".join(f"{k}={getattr(args, k)}" for k in keys)
    print(f"# {args.command} {items}", file=stream)


def build_parser():
    parser = argparse.ArgumentParser(prog="bayesvar", description="VaR and CVaR from tail (GPD) models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("risk", help="closed-form VaR/CVaR of a known distribution")
    p.add_argument("--family", required=True)
    for name in ("lambda", "alpha", "beta", "mu", "sigma", "gamma", "delta"):
        p.add_argument(f"--{name}", type=float, dest=f"par_{name}")
    p.add_argument("--p", type=float, default=0.95)

    p = sub.add_parser("estimate", help="estimate VaR/CVaR from one sample")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="file with one observation per line")
    src.add_argument("--gen", help="synthetic sample, e.g. exp:1, normal:0,1, cauchy:0,2, gamma:2,1")
    p.add_argument("--n", type=int, default=1024, help="size of a generated sample (default 1024)")
    p.add_argument("--method", required=True, choices=[m.value for m in Method])
    p.add_argument("--family", help="baseline family (required by bmh and ipbmh)")
    _level_args(p)
    _chain_args(p)

    p = sub.add_parser("study", help="Monte Carlo study over a parameter grid")
    p.add_argument("--family", required=True)
    p.add_argument("--params", help="semicolon-separated parameter tuples, e.g. '0,1;0,2' (default grid otherwise)")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--sizes", default=",".join(map(str, DEFAULT_SIZES)))
    p.add_argument("--methods", default="mh,bmh,ipbmh")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default="-", help="output CSV ('-' for stdout)")
    _level_args(p)
    _chain_args(p)

    p = sub.add_parser("backtest", help="expanding-window backtest on a date,price file")
    p.add_argument("prices")
    p.add_argument("--methods", default="mh,ipbmh")
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--family", default="normal", help="baseline family for ipbmh/bmh (default normal)")
    p.add_argument("--percent", action="store_true", help="work with returns in percent")
    p.add_argument("--out", default="-", help="output CSV ('-' for stdout)")
    _level_args(p)
    _chain_args(p)
    return parser


def cmd_risk(args):
    family = Family.parse(args.family)
    params = []
    for name in family.param_names:
        value = getattr(args, f"par_{name}")
        if value is None:
            raise ValueError(f"--{name} is required for family {family.value}")
        params.append(value)
    model = BaselineModel(family, tuple(params))
    print(f"# risk family={family.value} {' '.join(f'{k}={v:g}' for k, v in model.as_dict().items())} p={args.p}")
    r = exact_risk(model, args.p)
    print(f"var {fmt(r.var)}")
    print(f"cvar {UNDEFINED if r.cvar is None else fmt(r.cvar)}")


def cmd_estimate(args, parser):
    method = Method.parse(args.method)
    if method.needs_family and not args.family:
        parser.error(f"--family is required with --method {method.value}")
    if args.input:
        data = read_sample(args.input)
    else:
        data = sample(parse_generator(args.gen), args.n, args.seed, 0)
    _config_line(args, ("input", "gen", "n", "method", "family", "p", "p_u", "length", "burn_in", "thin", "seed"))
    res = estimate(method, data, args.p, args.p_u, _cfg(args), family=args.family)
    extra = "" if res.threshold is None else f" u={fmt(res.threshold)} m={res.m}"
    print(f"method={method.value} n={res.n}{extra}")
    print("measure estimate lo2.5 hi97.5")
    for name in ("var", "cvar"):
        point, lo, hi = res.measure(name)
        print(f"{name} {UNDEFINED}" if point is None else f"{name} {fmt(point)} {fmt(lo)} {fmt(hi)}")


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"# wrote {out}")


def _parse_params(text):
    return tuple(tuple(float(v) for v in _csv_list(chunk)) for chunk in text.split(";") if chunk.strip())


def cmd_study(args):
    grid = StudyGrid(
        family=args.family,
        params=_parse_params(args.params) if args.params else (),
        sizes=tuple(int(v) for v in _csv_list(args.sizes)),
        replications=args.reps,
        p=args.p,
        p_u=args.p_u,
        methods=tuple(_csv_list(args.methods)),
        cfg=_cfg(args),
    )
    _config_line(args, ("family", "params", "reps", "sizes", "methods", "p", "p_u",
                        "length", "burn_in", "thin", "seed", "jobs", "out"))
    _emit(write_study(run_study(grid, jobs=args.jobs)), args.out)


def cmd_backtest(args):
    series = read_prices(args.prices, percent=args.percent)
    _config_line(args, ("prices", "methods", "warmup", "family", "percent", "p", "p_u",
                        "length", "burn_in", "thin", "seed", "out"))
    rows = historical_backtest(series, args.p, args.p_u, tuple(_csv_list(args.methods)),
                               args.warmup, _cfg(args), args.family)
    _emit(write_backtest(rows), args.out)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", 0) is None:
        args.seed = default_seed()
    try:
        if args.command == "risk":
            cmd_risk(args)
        elif args.command == "estimate":
            cmd_estimate(args, parser)
        elif args.command == "study":
            cmd_study(args)
        else:
            cmd_backtest(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
