"""Command-line front end.

Subcommands: dare, simulate, identify, bounds, sweep, verify-bounds,
presets. Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 acceptance-threshold failure (sweep --assert-slope).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bounds import BoundInputs, hankel_error_bound
from .errors import ConfigError, SsidError
from .harness import ExperimentConfig, sweep, verify_bounds
from .identify import identify
from .model import StateSpace, check_assumptions, solve_dare
from .presets import get_preset, preset_names
from .simulate import SimConfig, Trajectory, simulate_innovation
from .structmats import HankelParams

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_THRESHOLD = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; the CLI contract says 1
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def _add_system_args(sub):
    sub.add_argument("--preset", help="built-in system name")
    sub.add_argument("--config", help="path to a JSON config file")


def _load_system(args) -> StateSpace:
    if args.preset:
        try:
            return get_preset(args.preset).system
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load {args.config}: {exc}") from exc
        doc = doc.get("system", doc)
        try:
            return StateSpace.from_json(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid system document: {exc}") from exc
    raise ConfigError("one of --preset or --config is required")


def _load_experiment(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    elif args.preset:
        cfg = ExperimentConfig.from_preset(args.preset)
    else:
        raise ConfigError("one of --preset or --config is required")
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def _print_json(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


# --- subcommand handlers ----------------------------------------------------


def _cmd_dare(args) -> int:
    ss = _load_system(args)
    kf = solve_dare(ss, tol=args.tol)
    doc = kf.to_json()
    doc["assumptions"] = check_assumptions(kf).to_json()
    _print_json(doc)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    ss = _load_system(args)
    kf = solve_dare(ss)
    traj = simulate_innovation(kf, SimConfig(nbar=args.nbar, seed=args.seed))
    if args.out:
        traj.to_csv(args.out)
        print(f"wrote {args.nbar} samples to {args.out}")
    else:
        traj.to_csv(Path("trajectory.csv"))
        print(f"wrote {args.nbar} samples to trajectory.csv")
    return EXIT_OK


def _cmd_identify(args) -> int:
    ss = _load_system(args)
    kf = solve_dare(ss)
    hp = HankelParams(p=args.p if args.p else ss.n + 1,
                      f=args.f if args.f else ss.n + 1)
    if args.traj:
        traj = Trajectory.from_csv(args.traj)
    else:
        nbar = args.nbar if args.nbar else 10_000 + hp.p + hp.f - 1
        traj = simulate_innovation(kf, SimConfig(nbar=nbar, seed=args.seed))
    he, real = identify(traj, hp, n=ss.n, ridge=args.ridge)
    doc = real.to_json()
    doc["gram_min_eig"] = he.gram_min_eig if np.isfinite(he.gram_min_eig) \
        else None
    doc["singular_values"] = he.singular_values.tolist()
    _print_json(doc)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    ss = _load_system(args)
    kf = solve_dare(ss)
    hp = HankelParams(p=args.p if args.p else ss.n + 1,
                      f=args.f if args.f else ss.n + 1)
    bi = BoundInputs(kf=kf, hp=hp, N=args.N, delta=args.delta,
                     c_universal=args.c_universal)
    _print_json(hankel_error_bound(bi, simplified=args.simplified).to_json())
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_experiment(args)
    result = sweep(cfg, jobs=args.jobs, out_dir=args.out)
    for N in cfg.n_grid:
        agg = result.per_n[N]
        med = agg.get("err_g", {}).get("median", float("nan"))
        print(f"N={N:>7d} p={agg['p']} median_err_g={med:.6g} "
              f"success={agg['success_rate']:.2f}")
    print(f"slope={result.slope:.4f} stderr={result.slope_stderr:.4f}")
    if args.assert_slope:
        lo, hi = (float(v) for v in args.assert_slope.split(","))
        if not lo <= result.slope <= hi:
            print(f"FAIL: slope {result.slope:.4f} outside [{lo}, {hi}]",
                  file=sys.stderr)
            return EXIT_THRESHOLD
        print(f"slope within [{lo}, {hi}]")
    return EXIT_OK


def _cmd_verify_bounds(args) -> int:
    cfg = _load_experiment(args)
    report = verify_bounds(cfg, jobs=args.jobs, out_dir=args.out)
    for key, val in report["per_n"].items():
        print(f"N={key:>7s} coverage={val['bound_coverage']:.3f} "
              f"(floor {val['bound_floor']:.3f}) "
              f"pe={val['pe_frequency']:.3f} (floor {val['pe_floor']:.3f}) "
              f"N0={val['n0']} N1={val['n1']} N2={val['n2']}")
    mart = report["martingale"]
    print(f"martingale violations={mart['violation_frequency']:.4f} "
          f"(threshold {mart['threshold']:.4f})")
    ok = (report["all_bounds_ok"] and report["all_pe_ok"]
          and report["martingale_ok"])
    print("verify-bounds:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_THRESHOLD


def _cmd_presets(args) -> int:
    for name in preset_names():
        preset = get_preset(name)
        rule = (f"p={preset.p_fixed}" if preset.p_fixed is not None
                else f"p=max(n+1, ceil({preset.c_p}*log N))")
        print(f"{name:>8s}  n={preset.system.n} m={preset.system.m} "
              f"f={preset.f} {rule}  {preset.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssid",
                     description="Stochastic subspace identification, "
                                 "finite-sample bounds and Monte Carlo "
                                 "verification.")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("dare", parents=[], help="solve the Riccati "
                          "equation and print the steady-state filter")
    _add_system_args(sub)
    sub.add_argument("--tol", type=float, default=1e-12)
    sub.set_defaults(func=_cmd_dare)

    sub = subs.add_parser("simulate", help="emit a trajectory CSV")
    _add_system_args(sub)
    sub.add_argument("--nbar", type=int, default=1000)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", help="output CSV path")
    sub.set_defaults(func=_cmd_simulate)

    sub = subs.add_parser("identify", help="one-shot estimate from a "
                          "trajectory CSV or a fresh simulation")
    _add_system_args(sub)
    sub.add_argument("--traj", help="trajectory CSV (columns k, y_1..y_m)")
    sub.add_argument("-p", type=int, help="past horizon (default n+1)")
    sub.add_argument("-f", type=int, help="future horizon (default n+1)")
    sub.add_argument("--nbar", type=int, help="samples to simulate")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--ridge", type=float, default=0.0)
    sub.set_defaults(func=_cmd_identify)

    sub = subs.add_parser("bounds", help="print the error-bound report JSON")
    _add_system_args(sub)
    sub.add_argument("-N", type=int, required=True, help="sample count")
    sub.add_argument("-p", type=int, help="past horizon (default n+1)")
    sub.add_argument("-f", type=int, help="future horizon (default n+1)")
    sub.add_argument("--delta", type=float, default=0.05)
    sub.add_argument("--c-universal", type=float, default=1.0)
    sub.add_argument("--simplified", action="store_true")
    sub.set_defaults(func=_cmd_bounds)

    sub = subs.add_parser("sweep", help="seeded Monte Carlo sweep over N")
    _add_system_args(sub)
    sub.add_argument("--seed", type=int, help="master seed override")
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--trials", type=int, help="trials per grid point")
    sub.add_argument("--assert-slope", metavar="LO,HI",
                     help="exit 3 unless the fitted slope lies in [LO, HI]")
    sub.set_defaults(func=_cmd_sweep)

    sub = subs.add_parser("verify-bounds", help="bound-coverage and "
                          "PE-frequency report")
    _add_system_args(sub)
    sub.add_argument("--seed", type=int, help="master seed override")
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--trials", type=int, help="trials per grid point")
    sub.set_defaults(func=_cmd_verify_bounds)

    sub = subs.add_parser("presets", help="list built-in systems")
    sub.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SsidError as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
