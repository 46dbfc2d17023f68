"""Command-line entry point: ``sliceplace {run,compare,preset,export}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (PRESETS, SCALES, base_config, mean_decision_us, preset_config, run_sweep,
                          simulate, summary_line, write_run_outputs)
from .metrics import write_dot
from .p2c import PlacementInvariantError
from .resource import LedgerError, build_psn
from .sim import SimulationError
from .slices import generate_trace

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("sliceplace")


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else base_config(args.scale)
    if getattr(args, "algo", None):
        cfg.sim.algorithm = args.algo
    if args.seed is not None:
        cfg.trace_seed = args.seed
        cfg.sim.seed = args.seed
    if args.out:
        cfg.output_dir = args.out
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    psn, trace, results = simulate(cfg)
    out = Path(cfg.output_dir)
    write_run_outputs(out, psn, trace, results)
    print(f"PSN: {psn.summary()}")
    for algo, res in results.items():
        print(summary_line(algo, res))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    cfg.sim.algorithm = "both"
    psn, trace, results = simulate(cfg)
    out = Path(cfg.output_dir)
    write_run_outputs(out, psn, trace, results)
    from .sim import CompareResult

    (out / "decisions.jsonl").write_text(CompareResult(results).decision_log())
    print(f"PSN: {psn.summary()}")
    for algo, res in results.items():
        print(summary_line(algo, res))
    exact, p2c = results["exact"].decisions, results["p2c"].decisions
    both = sum(1 for a, b in zip(exact, p2c) if a["accepted"] and b["accepted"])
    print(f"both accepted {both} of {len(exact)} arrivals; "
          f"mean decision time exact {mean_decision_us(results['exact']):.0f} us, "
          f"p2c {mean_decision_us(results['p2c']):.0f} us")
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.name not in PRESETS:
        raise ConfigError(f"unknown preset {args.name!r}; valid presets: {', '.join(PRESETS)}")
    seeds = range(1, args.seeds + 1) if args.seeds else None
    cfg = preset_config(args.name, args.scale, seeds)
    if args.algo:
        cfg.sim.algorithm = args.algo
    if args.horizon:
        cfg.horizon = args.horizon
    out = Path(args.out or f"out/{args.name}-{args.scale}")
    print(f"preset {args.name} ({PRESETS[args.name][0]}) at {args.scale} scale, "
          f"algorithms: {cfg.sim.algorithm}")
    run_sweep(cfg, out)
    print((out / "summary.csv").read_text(), end="")
    return EXIT_OK


def cmd_export(args) -> int:
    cfg = _load(args)
    psn = build_psn(cfg.psn)
    fmt = args.format or ("jsonl" if args.what == "trace" else "dot")
    out = Path(args.out or f"{args.what}.{fmt}")
    if args.what == "psn":
        if fmt == "dot":
            write_dot(psn, out)
        else:
            psn.save_json(out)
    elif args.what == "trace":
        if fmt != "jsonl":
            raise ConfigError("--format: traces export as jsonl")
        generate_trace(cfg.nspr, cfg.arrival_rate, cfg.horizon, psn, cfg.trace_seed).save_jsonl(out)
    else:
        import json
        import random

        from .slices import generate_nspr

        nspr = generate_nspr(cfg.nspr, psn, random.Random(cfg.trace_seed))
        if fmt == "dot":
            write_dot(nspr, out)
        else:
            out.write_text(json.dumps(nspr.to_dict(), sort_keys=True) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sliceplace", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, algo=True):
        p.add_argument("--config", help="experiment JSON file (defaults per --scale)")
        p.add_argument("--scale", choices=SCALES, default="desk",
                       help="built-in defaults when no --config is given")
        if algo:
            p.add_argument("--algo", choices=("exact", "p2c", "both"))
        p.add_argument("--seed", type=int)
        p.add_argument("--out")

    p = sub.add_parser("run", help="simulate one configuration")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="replay one trace with both algorithms")
    common(p, algo=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("preset", help="run one of the demonstration sweeps")
    p.add_argument("name", help=f"one of: {', '.join(PRESETS)}")
    p.add_argument("--scale", choices=SCALES, default="desk")
    p.add_argument("--algo", choices=("exact", "p2c", "both"))
    p.add_argument("--seeds", type=int, help="number of replication seeds (default 5)")
    p.add_argument("--horizon", type=float, help="override the simulated horizon")
    p.add_argument("--out")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("export", help="export a substrate, trace or request")
    p.add_argument("what", choices=("psn", "trace", "nspr"))
    p.add_argument("--format", choices=("json", "jsonl", "dot"),
                   help="dot or json for psn/nspr, jsonl for trace")
    common(p, algo=False)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, PlacementInvariantError, LedgerError, AssertionError) as exc:
        print(f"runtime invariant failure: {exc}", file=sys.stderr)
        dump = getattr(exc, "dump", None)
        if dump:
            path = Path("sliceplace-crash.json")
            path.write_text(dump)
            print(f"state dump written to {path}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
