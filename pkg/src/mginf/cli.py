"""Command-line front end: ``mginf <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dists, harness, lowerbound
from .estimators import ConditionWarning, EstimatorConfig, estimate_g, estimate_lambda, estimate_theta
from .sim import GridSpec, simulate


def parse_service(text: str) -> dists.ServiceDist:
    """``family:key=value,key=value``, e.g. ``gamma:shape=2,rate=2``."""
    family, _, rest = text.partition(":")
    cfg: dict = {"family": family}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        if ";" in val:
            cfg[key] = [float(v) for v in val.split(";")]
        else:
            cfg[key] = float(val)
    return dists.from_config(cfg)


def load_toml(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib

    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_samples(path) -> np.ndarray:
    p = Path(path)
    if p.suffix == ".npy":
        return np.load(p)
    data = np.loadtxt(p, delimiter=",", ndmin=1)
    if np.all(data == np.round(data)):
        return data.astype(np.int64)
    return data


def _holder(args) -> dists.HolderClass | None:
    if args.beta is None:
        return None
    lo, hi = args.interval
    return dists.HolderClass(beta=args.beta, L=args.L, K=args.K, interval=(lo, hi))


def _h(args):
    return "auto" if args.auto_h or args.h == "auto" else float(args.h)


def _emit(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


# ---------------------------------------------------------------- subcommands

def cmd_simulate(args) -> int:
    d = parse_service(args.service)
    grid = GridSpec.from_horizon(args.delta, args.T)
    path = simulate(d, args.lam, grid, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".npy":
        np.save(out, path.samples)
    else:
        np.savetxt(out, path.samples, fmt="%d", delimiter=",")
    if args.events:
        meta = {"seed": args.seed, "rho": args.lam * d.mean(), "delta": grid.delta, "n": grid.n,
                "initial_count": path.initial_count}
        header = json.dumps(meta) + "\ntime,kind"
        np.savetxt(args.events, np.column_stack([path.event_times, path.event_kinds]),
                   fmt=["%.17g", "%d"], delimiter=",", header=header, comments="")
    print(f"wrote {grid.n} samples (T={grid.T:g}, delta={grid.delta:g}) to {out}")
    return 0


def _estimate(args, fn, x0: float, lam=None) -> int:
    samples = load_samples(args.samples)
    grid = GridSpec(args.delta, samples.size)
    cfg = EstimatorConfig(x0=x0, ell=args.ell, h=_h(args), lam=lam, kappa=args.kappa,
                          holder=_holder(args))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditionWarning)
        res = fn(samples, cfg, grid)
    payload = res.to_json()
    if fn is estimate_g:
        payload["clipped"] = res.clipped
    _emit(payload, args.out)
    return 0


def cmd_estimate_g(args) -> int:
    return _estimate(args, estimate_g, args.x0, args.lam)


def cmd_estimate_lambda(args) -> int:
    return _estimate(args, estimate_lambda, 0.0)


def cmd_estimate_theta(args) -> int:
    return _estimate(args, estimate_theta, args.x0)


def cmd_risk(args) -> int:
    cfg = load_toml(args.config)
    spec = harness.ExperimentSpec.from_config(cfg)
    if args.replicates:
        spec.replicates = args.replicates
    out = Path(args.out) if args.out else Path(spec.output) if spec.output else harness.default_output_dir()
    spec.output = None
    report = harness.run_risk(spec, progress=None if args.quiet else print)
    csv_path, json_path = report.write(out)
    print(f"slope {report.slope:.4f} +/- {report.slope_se:.4f}")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_lower_bound(args) -> int:
    params = lowerbound.PairParams(beta=args.beta, L=args.L, K=args.K, x0=args.x0, d=args.d,
                                   delta=args.delta, T=args.T, c0=args.c0, c1=args.c1,
                                   c3=args.c3, c21=args.c21)
    pair = lowerbound.build_pair(params)
    kl = lowerbound.kl_pair(pair, method=args.kl)
    result = {"N": pair.N, "a": pair.a, "KL": kl,
              "risk_floor": lowerbound.two_point_risk_floor(pair, kl=kl), "f1_min": pair.f1_min}
    if args.dump:
        d = Path(args.dump)
        d.mkdir(parents=True, exist_ok=True)
        for name, grid in (("f0", pair.f0), ("f1", pair.f1)):
            np.savetxt(d / f"{name}.csv", np.column_stack([grid.omega, grid.values]),
                       delimiter=",", header="omega,value", comments="")
        lags = params.delta * np.arange(pair.n)
        np.savetxt(d / "gamma.csv", np.column_stack([lags, pair.gamma0, pair.gamma1]),
                   delimiter=",", header="t,gamma0,gamma1", comments="")
    _emit(result, args.out)
    return 0


def cmd_oracle_check(args) -> int:
    results = harness.run_oracle_suite(args.seed, args.replicates)
    print(harness.format_table(results))
    if args.csv:
        harness.write_oracle_csv(results, args.csv)
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------- parser

def _add_estimator_args(p, x0: bool):
    p.add_argument("--samples", required=True, help="sample file (.npy or comma/newline text)")
    p.add_argument("--delta", type=float, required=True)
    if x0:
        p.add_argument("--x0", type=float, required=True)
    p.add_argument("--ell", type=int, default=2)
    p.add_argument("--h", default="auto", help="window half-width or 'auto'")
    p.add_argument("--auto-h", action="store_true", help="rate-optimal width (needs --beta)")
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--beta", type=float)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--interval", type=float, nargs=2, default=(0.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--out", help="also write the JSON result here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mginf", description="M/G/infinity service-law estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one stationary path")
    p.add_argument("--service", required=True, help="e.g. exponential:rate=1 or dirac:atoms=1;2,weights=0.5;0.5")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--events", help="optional CSV of event times and kinds (+1 arrival, -1 departure)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate-g", help="estimate G(x0) from grid samples")
    _add_estimator_args(p, x0=True)
    p.add_argument("--lam", "--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_estimate_g)

    p = sub.add_parser("estimate-lambda", help="estimate the arrival rate from grid samples")
    _add_estimator_args(p, x0=False)
    p.set_defaults(func=cmd_estimate_lambda)

    p = sub.add_parser("estimate-theta", help="estimate gamma'(x0) of a zero-mean Gaussian sequence")
    _add_estimator_args(p, x0=True)
    p.set_defaults(func=cmd_estimate_theta)

    p = sub.add_parser("risk", help="run a Monte Carlo risk ladder from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help=f"output directory (default ${harness.OUTPUT_ENV} or ./mginf_out)")
    p.add_argument("--replicates", type=int)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("lower-bound", help="build the two-point pair and report its risk floor")
    for name, default in (("beta", 1.0), ("L", 1.0), ("K", 1.0), ("x0", 1.0), ("d", 0.5),
                          ("delta", 1 / 16), ("T", 4096.0)):
        p.add_argument(f"--{name}", type=float, default=default)
    p.add_argument("--c0", type=float, default=lowerbound.DEFAULT_C0)
    p.add_argument("--c1", type=float, default=lowerbound.DEFAULT_C1)
    p.add_argument("--c3", type=float, default=lowerbound.DEFAULT_C3)
    p.add_argument("--c21", type=float, default=lowerbound.DEFAULT_C21)
    p.add_argument("--kl", choices=("auto", "dense", "whittle"), default="auto")
    p.add_argument("--dump", help="directory for f0/f1/gamma CSV dumps")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lower_bound)

    p = sub.add_parser("oracle-check", help="run the moment-oracle self checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=20_000)
    p.add_argument("--csv", help="write the pass/fail table as CSV")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
