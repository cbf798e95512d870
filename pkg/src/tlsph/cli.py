"""Command-line entry point.

    tlsph run <case> [flags]   integrate a benchmark case and write outputs
    tlsph list-cases           show the available case presets
    tlsph verify               run the independent oracle self-checks

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 numerical failure (the failing simulation time is printed).
"""

import argparse
import json
import os
import sys

from . import cases
from .errors import ConfigurationError, NumericalError, TlsphError
from .solver import run_simulation


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tlsph",
        description="Total-Lagrangian SPH solid dynamics with Kelvin-Voigt damping",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark case")
    run.add_argument("case", help="case id (see list-cases)")
    run.add_argument("--dp", type=float, default=None, help="lattice spacing in m")
    run.add_argument("--alpha", type=float, default=None,
                     help="damping scale (default 0.5; 0 disables damping)")
    run.add_argument("--no-damping", action="store_true",
                     help="shorthand for --alpha 0")
    run.add_argument("--cfl", type=float, default=None, help="CFL number (default 0.6)")
    run.add_argument("--t-end", type=float, default=None, help="end time in s")
    run.add_argument("--omega0", type=float, default=None,
                     help="twisting start angular velocity in rad/s")
    run.add_argument("--stl", default=None, help="mesh path for the stl case")
    run.add_argument("--v0", type=float, default=None, help="start/band speed in m/s")
    run.add_argument("--out", default="out", help="output directory (default ./out)")
    run.add_argument("--threads", type=int, default=None, help="worker thread count")
    run.add_argument("--config", default=None,
                     help="JSON file overriding preset fields (flags override the file)")

    sub.add_parser("list-cases", help="list available case presets")

    verify = sub.add_parser("verify", help="run the oracle self-checks")
    verify.add_argument("--quick", action="store_true",
                        help="reduce lattice sizes and sample counts")
    return parser


def resolve_config(args):
    """Preset < config file < command-line flags."""
    params = cases.default_parameters(args.case)
    if args.config is not None:
        try:
            with open(args.config) as fh:
                overrides = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"malformed JSON config: {exc}") from None
        if not isinstance(overrides, dict):
            raise ConfigurationError("config file must hold a JSON object")
        if overrides.get("case", args.case) != args.case:
            raise ConfigurationError(
                f"config file is for case {overrides['case']!r}, not {args.case!r}"
            )
        params.update(overrides)
    for key in ("dp", "alpha", "cfl", "omega0", "stl", "v0", "threads"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if args.t_end is not None:
        params["t_end"] = args.t_end
    if args.no_damping:
        params["alpha"] = 0.0
    params["case"] = args.case
    return cases.make_config(params)


def emit_run_manifest(config, out_dir):
    """Write the fully resolved configuration so the run is reproducible."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(cases.config_to_params(config), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot write run manifest: {exc}") from None
    return path


def _cmd_run(args):
    config = resolve_config(args)
    out_dir = os.path.join(args.out, config.case)
    emit_run_manifest(config, out_dir)
    result = run_simulation(config, out_dir=out_dir)
    print(
        f"{config.case}: {result.system.n} particles, {result.n_steps} steps "
        f"to t = {result.t_final:.6g} s -> {out_dir}"
    )
    return 0


def _cmd_list_cases(_args):
    for case in cases.case_ids():
        print(f"{case:10s} {cases.CASE_DESCRIPTIONS[case]}")
    return 0


def _cmd_verify(args):
    from . import verify as verify_mod

    results = verify_mod.run_verification(quick=args.quick)
    ok = True
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        print(f"{status}  {name:28s} {detail}")
        ok = ok and passed
    print("verification " + ("passed" if ok else "FAILED"))
    return 0 if ok else 1


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "list-cases":
            return _cmd_list_cases(args)
        if args.command == "verify":
            return _cmd_verify(args)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except TlsphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
