"""Command-line entry point.

Subcommands: ``run`` (one scenario from a YAML config), ``validate``
(schema check only), ``fig3`` (Rabi-oscillation suite) and ``fig4``
(photon-subtraction study).  Exit codes: 0 success, 1 validation failure,
2 numerical failure.
"""

import argparse
import sys

import yaml

from .errors import (
    ConfigValidationError,
    NumericalFailureError,
    PulseJcmError,
    StateCorruptionError,
    StiffnessError,
)
from .scenarios import fig3_suite, fig4_suite, run_scenario, validate_config

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _load_config(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigValidationError(f"config file not found: {path}", [path])
    except yaml.YAMLError as exc:
        raise ConfigValidationError(f"config file is not valid YAML: {exc}", [path])
    if raw is None:
        raise ConfigValidationError("config file is empty", [path])
    return raw


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pulse-jcm",
        description="Simulate a two-level emitter interacting with a traveling light pulse.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario from a YAML config file")
    p_run.add_argument("config")
    p_run.add_argument("--outdir", default="out")
    p_run.add_argument("--stem", default=None, help="output file stem (default: config name)")

    p_val = sub.add_parser("validate", help="validate a config file without running it")
    p_val.add_argument("config")

    p_f3 = sub.add_parser("fig3", help="Rabi-oscillation comparison suite (5 runs)")
    p_f3.add_argument("--outdir", default="out/fig3")
    p_f3.add_argument("--photons", type=int, default=20)
    p_f3.add_argument("--tau", type=float, default=2.0 ** -0.5,
                  help="intensity-std width; default: amplitude std of one lifetime")
    p_f3.add_argument("--record-points", type=int, default=241)

    p_f4 = sub.add_parser("fig4", help="photon-subtraction fidelity study")
    p_f4.add_argument("--outdir", default="out/fig4")
    p_f4.add_argument("--tau-min", type=float, default=0.18)
    p_f4.add_argument("--tau-max", type=float, default=0.62)
    p_f4.add_argument("--tau-steps", type=int, default=12)
    p_f4.add_argument("--gamma-refl", default="0,0.05,0.1,0.2,1",
                      help="comma-separated reflection rates")
    p_f4.add_argument("--bins", type=int, default=800,
                      help="time bins per sweep point (refinement uses 2000)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            cfg = validate_config(_load_config(args.config))
            print(f"OK: scenario '{cfg.name}' (model {cfg.model}), "
                  f"hash {cfg.config_hash()[:12]}")
            return EXIT_OK
        if args.command == "run":
            cfg = validate_config(_load_config(args.config))
            result = run_scenario(cfg, outdir=args.outdir, stem=args.stem)
            print(f"wrote {result.csv_path} and {result.json_path}")
            return EXIT_OK
        if args.command == "fig3":
            results = fig3_suite(
                outdir=args.outdir,
                photons=args.photons,
                tau=args.tau,
                record_points=args.record_points,
                progress=lambda s: print(f"running {s} ...", flush=True),
            )
            for stem, res in results.items():
                print(f"wrote {res.csv_path}")
            return EXIT_OK
        if args.command == "fig4":
            gamma_list = [float(x) for x in args.gamma_refl.split(",") if x != ""]
            out = fig4_suite(
                outdir=args.outdir,
                tau_min=args.tau_min,
                tau_max=args.tau_max,
                tau_steps=args.tau_steps,
                gamma_refl_list=gamma_list,
                bins_sweep=args.bins,
                progress=lambda s: print(f"sweep point {s}", flush=True),
            )
            opt = out["optimum"]
            print(f"optimum: tau = {opt['tau']:.4f}, fidelity = {opt['fidelity']:.5f}")
            return EXIT_OK
    except ConfigValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StiffnessError, StateCorruptionError, NumericalFailureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PulseJcmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
