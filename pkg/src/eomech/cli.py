"""Command-line entry point: ``eomech simulate | reproduce | validate``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import oracles
from .params import ConfigError, load_config, default_params
from .sweep import (PRESET_EPSILONS, PRESET_METRIC, PRESET_OMEGA_C, Axis, SweepSpec,
                    reproduce, run_sweep, write_csv)

CONFIG_ENV = "EOMECH_CONFIG"

log = logging.getLogger("eomech")


def _key_value(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, _, value = (s.strip() for s in text.partition("="))
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"value for {key!r} is not a number") from None


def _axis(text):
    try:
        return Axis.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _epsilons(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from None
    if len(vals) < 2 or min(vals) <= 0:
        raise argparse.ArgumentTypeError("need at least two positive epsilons")
    return vals


def _omega_range(text):
    try:
        a = Axis.parse(f"omega_c_norm={text}")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if ":" not in text or text.endswith(":log"):
        raise argparse.ArgumentTypeError("expected START:STOP:COUNT")
    return a.values[0], a.values[-1], len(a.values)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="eomech",
        description="Output-mode entanglement and teleportation fidelity of an "
                    "electro-optomechanical transducer.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a parameter sweep and write CSV")
    sim.add_argument("--config", default=os.environ.get(CONFIG_ENV),
                     help=f"key = value file (SI units); default ${CONFIG_ENV} or built-in defaults")
    sim.add_argument("--set", dest="overrides", action="append", type=_key_value, default=[],
                     metavar="KEY=VALUE", help="override a parameter or filter setting")
    sim.add_argument("--sweep", dest="axes", action="append", type=_axis, default=[],
                     metavar="AXIS", help="name=start:stop:count[:log] or name=v1,v2,...")
    sim.add_argument("--out", required=True, help="output CSV path ('-' for stdout)")
    sim.add_argument("--workers", type=_positive_int, default=None)
    sim.add_argument("--flip-detunings", action="store_true")

    rep = sub.add_parser("reproduce", help="regenerate a figure's data")
    rep.add_argument("--preset", required=True, choices=sorted(PRESET_METRIC) + ["all"])
    rep.add_argument("--out", required=True, help="output directory")
    rep.add_argument("--config", default=os.environ.get(CONFIG_ENV))
    rep.add_argument("--flip-detunings", action="store_true")
    rep.add_argument("--workers", type=_positive_int, default=None)
    rep.add_argument("--epsilons", type=_epsilons, default=PRESET_EPSILONS,
                     help="comma-separated epsilon values (default 1,5,20,100)")
    rep.add_argument("--omega-c", type=_omega_range, default=PRESET_OMEGA_C,
                     metavar="START:STOP:COUNT",
                     help="omega_c/omega_m axis, written --omega-c=-2:0:201 (the default)")

    val = sub.add_parser("validate", help="run the oracle suites")
    val.add_argument("--budget", type=_positive_int, default=200,
                     help="random samples for the fidelity suite (spectral suites use budget/4)")
    val.add_argument("--seed", type=int, default=42)
    val.add_argument("--summary", default="validation_summary.json",
                     help="machine-readable report path")
    return ap


def _base(config):
    return load_config(config) if config else default_params()


def cmd_simulate(args) -> int:
    base = _base(args.config)
    spec = SweepSpec(tuple(args.axes), "none", dict(args.overrides),
                     args.flip_detunings, args.workers)
    names = [a.name for a in spec.axes]
    if len(set(names)) != len(names):
        raise ConfigError("each key may be swept only once")
    rows = run_sweep(base, spec)
    if args.out == "-":
        write_csv(rows, base, spec, sys.stdout)
    else:
        write_csv(rows, base, spec, args.out)
    return 0


def cmd_reproduce(args) -> int:
    base = _base(args.config)
    presets = sorted(PRESET_METRIC) if args.preset == "all" else [args.preset]
    for preset in presets:
        summary = reproduce(preset, args.out, base, args.flip_detunings, args.workers,
                            args.epsilons, args.omega_c)
        verdict = summary.get("peak_increasing_with_epsilon",
                              summary.get("largest_epsilon_beats_no_cloning"))
        print(f"{preset}: wrote {args.out}/{preset}.csv; verdict {str(verdict).lower()}")
    return 0


def cmd_validate(args) -> int:
    reports = oracles.run_all(args.seed, args.budget)
    print(f"{'oracle':34s} {'max_abs_err':>12s} {'max_rel_err':>12s} {'tol':>9s} "
          f"{'evals':>9s}  result")
    for r in reports:
        print(f"{r.name:34s} {r.max_abs_err:12.3e} {r.max_rel_err:12.3e} {r.tolerance:9.1e} "
              f"{r.budget:9d}  {'PASS' if r.passed else 'FAIL'}")
    ok = all(r.passed for r in reports)
    payload = {"seed": args.seed, "budget": args.budget, "passed": ok,
               "reports": [r.as_dict() for r in reports]}
    with open(args.summary, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"simulate": cmd_simulate, "reproduce": cmd_reproduce,
               "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"eomech: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"eomech: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report any failure as exit 1
        log.debug("failure", exc_info=True)
        print(f"eomech: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
