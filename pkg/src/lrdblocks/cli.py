"""Command line interface.

One subcommand per workflow stage: simulate series, inspect Hermite
coefficients, estimate variances, evaluate the theoretical expansions,
select blocks, run the rank test, and reproduce the Monte Carlo tables.
All outputs are CSV (key,value for single records) so they pipe cleanly.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .estimators import BlockScheme, variance_estimator
from .experiments import (
    ExperimentConfig,
    TableRun,
    coverage_study,
    mse_curve,
    optimal_block_table,
    rank_test_power,
    variance_mse_table,
)
from .functionals import (
    TrimmedMean,
    block_jackknife,
    huber_functional,
    mean_functional,
    plugin_variance,
)
from .hermite import hermite_coefficients, ranks
from .models import FGN, Farima, preset_transform, simulate_gaussian
from .ranktest import RankTestConfig, rank_test
from .selection import SelectionConfig, local_whittle, two_scale_block_estimate
from .theory import optimal_block


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _print_kv(pairs) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("key", "value"))
    for k, v in pairs:
        w.writerow((k, _fmt(v)))


def _print_rows(columns, rows) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def _read_series(path: str) -> np.ndarray:
    """One value per line; a non-numeric first line is taken as a header."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise SystemExit(f"{path}: empty series file")
    try:
        float(lines[0])
    except ValueError:
        lines = lines[1:]
    return np.array([float(ln) for ln in lines])


def _build_model(args):
    if args.model == "fgn":
        if args.hurst is None:
            raise SystemExit("--model fgn requires --hurst")
        return FGN(args.hurst)
    if args.d is None:
        raise SystemExit("--model farima requires --d")
    return Farima(args.d)


def _model_for_alpha(kind: str, alpha: float):
    # canonical Gaussian designs: fGn H = 1 - alpha/2, FARIMA d = (1 - alpha)/2
    return FGN(1.0 - alpha / 2.0) if kind == "fgn" else Farima((1.0 - alpha) / 2.0)


def _parse_functional(text: str):
    name, _, arg = text.partition(":")
    if name == "mean":
        return mean_functional()
    if name == "trimmed":
        return TrimmedMean(float(arg) if arg else 0.2)
    if name == "huber":
        return huber_functional(float(arg)) if arg else huber_functional()
    raise SystemExit(f"unknown functional {text!r} (use mean, trimmed:<delta>, huber:<c>)")


def _cmd_simulate(args) -> None:
    model = _build_model(args)
    z = simulate_gaussian(model, args.n, seed=args.seed)
    x = np.asarray(preset_transform(args.transform)(z), dtype=float)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("x\n")
        out.writelines(format(v, ".17g") + "\n" for v in x)
    finally:
        if args.out:
            out.close()


def _cmd_coeffs(args) -> None:
    spec = hermite_coefficients(preset_transform(args.g), k_max=args.kmax)
    m, m2, mp = ranks(spec.coefficients)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("k", "j_k"))
    for k, j in enumerate(spec.coefficients):
        w.writerow((k, _fmt(float(j))))
    for label, value in (("m", m), ("m2", m2), ("mp", mp)):
        w.writerow((label, value))


def _cmd_estimate(args) -> None:
    x = _read_series(args.infile)
    functional = _parse_functional(args.functional)
    alpha_m = float(local_whittle(x)) if args.alpham == "auto" else float(args.alpham)
    if args.ell == "auto":
        ell = two_scale_block_estimate(x).ell_n
    else:
        ell = int(args.ell)
    if args.method == "bjk":
        est = block_jackknife(functional, x, ell, alpha_m)
        scheme_kind = "nol"
    else:
        scheme = BlockScheme(args.scheme, ell)
        est = plugin_variance(functional, x, scheme, alpha_m)
        scheme_kind = args.scheme
    _print_kv([
        ("value", est.value),
        ("n", x.size),
        ("ell", ell),
        ("scheme", scheme_kind),
        ("alpha_m", alpha_m),
        ("method", args.method),
        ("functional", args.functional),
    ])


def _cmd_theory(args) -> None:
    model = _model_for_alpha(args.model, args.alpha)
    spec = hermite_coefficients(preset_transform(args.g))
    report = optimal_block(args.n, model, spec, scheme_kind=args.scheme)
    pairs = []
    for field in dataclasses.fields(report):
        value = getattr(report, field.name)
        if callable(value):
            if field.name != "mse":  # mse(ell_opt) is already the mse_at_opt field
                pairs.append((f"{field.name}_at_opt", float(value(report.ell_opt))))
        elif isinstance(value, dict):
            pairs.extend((f"{field.name}.{k}", v) for k, v in sorted(value.items()))
        else:
            pairs.append((field.name, value))
    _print_kv(pairs)


def _cmd_select(args) -> None:
    x = _read_series(args.infile)
    cfg = SelectionConfig(c1=args.c1, c2=args.c2, theta=args.theta, r=args.r,
                          scheme_kind=args.scheme)
    result = two_scale_block_estimate(x, cfg)
    record = dataclasses.asdict(result)
    if args.json:
        print(json.dumps(record, sort_keys=True, default=float))
    else:
        _print_kv(sorted(record.items()))


def _cmd_ranktest(args) -> None:
    x = _read_series(args.infile)
    ell = None if args.ell == "auto" else int(args.ell)
    cfg = RankTestConfig(ell=ell, scheme_kind=args.scheme, statistic=args.stat,
                         resamples=args.resamples, alpha_sig=args.alpha_sig,
                         seed=args.seed)
    res = rank_test(x, cfg)
    _print_kv([(f.name, getattr(res, f.name)) for f in dataclasses.fields(res)])


_TABLES = {
    "table1": lambda run: optimal_block_table(run),
    "table2": lambda run: variance_mse_table(run, "mean"),
    "table4": lambda run: variance_mse_table(run, "trimmed"),
    "table5": lambda run: coverage_study(run),
    "table6": lambda run: rank_test_power(run),
}


def _cmd_table(args) -> None:
    run = TableRun(reps=args.reps, seed=args.seed, out_dir=args.out,
                   full_scale=args.full)
    result = _TABLES[args.command](run)
    if result.csv_path is not None:
        print(result.csv_path)
    else:
        _print_rows(result.columns, result.rows)


def _cmd_msecurve(args) -> None:
    if (args.gmin is None) != (args.gmax is None):
        raise SystemExit("--gmin and --gmax must be given together")
    grid = tuple(range(args.gmin, args.gmax + 1)) if args.gmin is not None else None
    config = ExperimentConfig(
        model=_model_for_alpha(args.model, args.alpha),
        transform=args.g,
        n_values=tuple(args.n),
        reps=args.reps,
        scheme_kind=args.scheme,
        ell_grid=grid,
        seed=args.seed,
        out_path=args.out,
    )
    result = mse_curve(config)
    if result.csv_path is not None:
        print(result.csv_path)
    else:
        _print_rows(result.columns, result.rows)


def _add_series_arg(p) -> None:
    p.add_argument("--in", dest="infile", required=True, help="series CSV, one value per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrdblocks",
        description="Block resampling inference for long-range dependent series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a Gaussian-subordinated LRD series")
    p.add_argument("--model", choices=("fgn", "farima"), default="fgn")
    p.add_argument("--hurst", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transform", default="identity")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("coeffs", help="Hermite coefficients and ranks of a transform")
    p.add_argument("--g", required=True)
    p.add_argument("--kmax", type=int, default=32)
    p.set_defaults(func=_cmd_coeffs)

    p = sub.add_parser("estimate", help="block variance estimate for a functional")
    _add_series_arg(p)
    p.add_argument("--ell", default="auto", help="block length or 'auto'")
    p.add_argument("--scheme", choices=("ol", "nol"), default="ol")
    p.add_argument("--alpham", default="auto", help="memory exponent or 'auto'")
    p.add_argument("--functional", default="mean")
    p.add_argument("--method", choices=("plugin", "bjk"), default="plugin")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("theory", help="optimal block size and MSE expansion report")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scheme", choices=("ol", "nol"), default="ol")
    p.add_argument("--model", choices=("fgn", "farima"), default="fgn")
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("select", help="two-scale data-driven block selection")
    _add_series_arg(p)
    p.add_argument("--c1", type=float, default=9.0)
    p.add_argument("--c2", type=float, default=12.0)
    p.add_argument("--theta", type=float, default=0.95)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--scheme", choices=("ol", "nol"), default="nol")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("ranktest", help="bootstrap test of Hermite rank m = 1")
    _add_series_arg(p)
    p.add_argument("--ell", default="auto")
    p.add_argument("--scheme", choices=("ol", "nol"), default="nol")
    p.add_argument("--stat", choices=("ad", "ks"), default="ad")
    p.add_argument("--m", type=int, default=200, dest="resamples",
                   help="number of bootstrap resamples")
    p.add_argument("--alpha-sig", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_ranktest)

    for name, doc in (
        ("table1", "theoretical-MSE argmin blocks"),
        ("table2", "MSE of variance estimators, sample mean"),
        ("table4", "MSE of plug-in estimators, trimmed mean"),
        ("table5", "bootstrap interval coverage"),
        ("table6", "rank test power"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--reps", type=int)
        p.add_argument("--seed", type=int, default=2026)
        p.add_argument("--out", help="output directory for CSV + manifest")
        p.add_argument("--full", action="store_true", help="paper-scale replicates")
        p.set_defaults(func=_cmd_table)

    p = sub.add_parser("msecurve", help="empirical MSE across block lengths")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--model", choices=("fgn", "farima"), default="fgn")
    p.add_argument("--n", type=int, action="append", required=True)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--scheme", choices=("ol", "nol"), default="ol")
    p.add_argument("--gmin", type=int)
    p.add_argument("--gmax", type=int)
    p.add_argument("--seed", type=int, default=2026)
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=_cmd_msecurve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
