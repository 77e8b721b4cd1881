"""Command-line entry point: ``laserjump <experiment> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, LaserJumpError
from .experiments import EXPERIMENTS, ExperimentSpec, run_experiment, validate_config
from .fileio import write_trace
from .model import ModelParams, SystemState
from .ssa import SimConfig, laser_start, simulate_closed, simulate_laser

log = logging.getLogger("laserjump")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

_SPEC_FIELDS = ("N", "alpha", "J", "pump", "runs", "duration", "seed", "jobs", "omega_max")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, help="number of two-level atoms")
    p.add_argument("--alpha", type=float, help="loss (detection) rate per quantum")
    p.add_argument("--J", type=float, help="pump rate")
    p.add_argument("--pump", choices=["quiet", "poisson"])
    p.add_argument("--runs", type=int)
    p.add_argument("--duration", type=float, help="measured duration of each run")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes for replica runs")
    p.add_argument("--omega-max", dest="omega_max", type=float, help="highest spectral bin, in units of alpha")
    p.add_argument("--out", help="output directory (trace file for `simulate`)")
    p.add_argument("--config", type=Path, help="JSON file mirroring the experiment spec")
    p.add_argument("--check", action="store_true", help="validate the configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laserjump", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name, help=f"run the {name} experiment"))
    sim = sub.add_parser("simulate", help="simulate one run and write its trace CSV")
    _add_common(sim)
    sim.add_argument("--n0", type=int, help="initial upper-state atoms")
    sim.add_argument("--m0", type=int, help="initial quanta")
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    overrides = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        params = cfg.pop("params", {}) or {}
        # ModelParams-style keys are accepted alongside the flat ones
        for src, dst in (("n_atoms", "N"), ("loss_rate", "alpha"), ("pump_rate", "J"), ("pump_discipline", "pump")):
            if src in params:
                overrides[dst] = params[src]
        cfg.pop("name", None)
        if "output_dir" in cfg:
            overrides["output_dir"] = cfg.pop("output_dir")
        unknown = set(cfg) - set(_SPEC_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        overrides.update(cfg)
    for f in _SPEC_FIELDS:
        v = getattr(args, f, None)
        if v is not None:
            overrides[f] = v
    if args.out is not None:
        overrides["output_dir"] = args.out
    name = args.command
    overrides.setdefault("output_dir", f"out/{name}")
    return ExperimentSpec.with_defaults(name, **overrides)


def _simulate(args) -> int:
    N = args.N or 100
    params = ModelParams(N, args.alpha or 0.0, args.J or 0.0, args.pump or "quiet")
    if params.is_closed:
        initial = SystemState(N if args.n0 is None else args.n0, args.m0 or 0)
        fn = simulate_closed
    else:
        start = laser_start(params)
        initial = SystemState(
            start.n_upper if args.n0 is None else args.n0, start.m_quanta if args.m0 is None else args.m0
        )
        fn = simulate_laser
    cfg = SimConfig(params, initial, args.duration or 1.0, seed=args.seed or 0)
    if args.check:
        return EXIT_OK
    trace, _ = fn(cfg)
    out = Path(args.out or "trace.csv")
    write_trace(trace, out)
    print(f"{len(trace)} events -> {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            return _simulate(args)
        spec = spec_from_args(args)
        diag = validate_config(spec)
        if diag:
            for d in diag:
                print(f"config error: {d}", file=sys.stderr)
            return EXIT_CONFIG
        if args.check:
            print("configuration ok")
            return EXIT_OK
        summary = run_experiment(spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LaserJumpError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
