"""Single runs, parameter sweeps and the four demonstration presets."""

from __future__ import annotations

import copy
import csv
import json
import statistics
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .config import ConfigError, ExperimentConfig, SweepSpec, apply_sweep_value
from .metrics import format_fraction, write_csv, write_jsonl
from .resource import LinkSpec, build_psn, demo_psn_config, desk_psn_config
from .sim import ALGORITHMS, SimResult, replay_compare, run_simulation
from .slices import NsprParams, generate_trace

PRESETS = {
    # name -> (demonstrated aspect, sweep parameter)
    "requirements": ("achieving different slice requirements (CPU, RAM, E2E latency)", "requirements"),
    "critical-load": ("sustaining acceptance under critical network load", "arrival_rate"),
    "node-capacity": ("varying the amount of resources in each hosting node", "capacity_scale"),
    "nspr-size": ("varying the number of VNFs per slice", "chain_len"),
}

SCALES = ("desk", "demo")

REQUIREMENT_LEVELS = [
    {"name": "light", "cpu": [1, 2], "ram": [1, 4], "e2e_latency": [4_000, 8_000]},
    {"name": "medium", "cpu": [1, 4], "ram": [1, 8], "e2e_latency": [2_000, 6_000]},
    {"name": "heavy", "cpu": [2, 8], "ram": [4, 16], "e2e_latency": [1_000, 3_000]},
]

_SWEEPS = {
    "desk": {
        "requirements": REQUIREMENT_LEVELS,
        "critical-load": [0.0, 0.5, 1.0, 2.0, 4.0, 8.0],
        "node-capacity": [0.25, 0.5, 1.0, 2.0, 4.0, 16.0],
        "nspr-size": [1, 2, 3, 4, 5, 6],
    },
    "demo": {
        "requirements": REQUIREMENT_LEVELS,
        "critical-load": [0.0, 20.0, 40.0, 60.0, 90.0, 120.0],
        "node-capacity": [0.25, 0.5, 1.0, 2.0, 4.0],
        "nspr-size": [1, 2, 3, 4, 5, 6],
    },
}


def base_config(scale: str = "desk") -> ExperimentConfig:
    """Default experiment for a scale. ``desk`` keeps the exact solver
    tractable (6 servers, chains of at most 4); ``demo`` is the 1008-server
    substrate, where only P2C is run."""
    if scale == "desk":
        return ExperimentConfig(
            psn=desk_psn_config(intra_link=LinkSpec(bw=1_000, latency=10)),
            nspr=NsprParams(chain_len=(1, 4), cpu=(1, 4), ram=(1, 8), bw=(1, 10), mean_holding=10.0),
            arrival_rate=2.0,
            horizon=50.0,
        )
    if scale == "demo":
        cfg = ExperimentConfig(psn=demo_psn_config(), nspr=NsprParams(), arrival_rate=60.0, horizon=100.0)
        cfg.sim.algorithm = "p2c"
        return cfg
    raise ConfigError(f"unknown scale {scale!r}; expected one of {', '.join(SCALES)}")


def preset_config(name: str, scale: str = "desk", seeds=None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    cfg = base_config(scale)
    cfg.sim.algorithm = "both" if scale == "desk" else "p2c"
    cfg.sweep = SweepSpec(PRESETS[name][1], copy.deepcopy(_SWEEPS[scale][name]),
                          list(seeds) if seeds is not None else [1, 2, 3, 4, 5])
    return cfg


def algorithms_for(cfg: ExperimentConfig) -> tuple[str, ...]:
    return ALGORITHMS if cfg.sim.algorithm == "both" else (cfg.sim.algorithm,)


def simulate(cfg: ExperimentConfig, seed: Optional[int] = None):
    """Build substrate and trace, run every configured algorithm.

    Returns ``(psn, trace, {algo: SimResult})``; the substrate is left fresh,
    each algorithm runs on its own clone.
    """
    trace_seed = cfg.trace_seed if seed is None else seed
    sim_cfg = copy.deepcopy(cfg.sim)
    if seed is not None:
        sim_cfg.seed = seed
    psn = build_psn(cfg.psn)
    trace = generate_trace(cfg.nspr, cfg.arrival_rate, cfg.horizon, psn, trace_seed)
    if sim_cfg.algorithm == "both":
        results = replay_compare(psn, trace, sim_cfg, sim_cfg).results
    else:
        results = {sim_cfg.algorithm: run_simulation(psn.clone(), trace, sim_cfg)}
    return psn, trace, results


def final_ratio(result: SimResult) -> Optional[Fraction]:
    return result.series.samples[-1].acceptance_ratio


def mean_decision_us(result: SimResult) -> float:
    times = [d["decision_us"] for d in result.decisions]
    return statistics.fmean(times) if times else 0.0


def mean_cpu_util(result: SimResult) -> float:
    return statistics.fmean(float(s.util["util_cpu_all"]) for s in result.series.samples)


def write_run_outputs(out: Path, psn, trace, results: dict[str, SimResult]):
    out.mkdir(parents=True, exist_ok=True)
    psn.save_json(out / "psn.json")
    trace.save_jsonl(out / "trace.jsonl")
    for algo, res in results.items():
        write_csv(res.series, out / f"metrics_{algo}.csv")
        write_jsonl(res.series, out / f"metrics_{algo}.jsonl")
        (out / f"decisions_{algo}.jsonl").write_text(res.decision_log())
        (out / f"placements_{algo}.jsonl").write_text(res.placement_log())
        (out / f"final_state_{algo}.json").write_text(res.state.dump() + "\n")


def summary_line(algo: str, res: SimResult) -> str:
    ratio = final_ratio(res)
    shown = "n/a" if ratio is None else f"{float(ratio):.4f} ({res.state.accepts}/{res.state.arrivals})"
    return f"{algo}: acceptance ratio {shown}, mean decision time {mean_decision_us(res):.0f} us"


SUMMARY_BY_SEED_HEADER = ["sweep_value", "seed", "algo", "arrivals", "accepts", "acceptance_ratio",
                          "mean_util_cpu", "mean_decision_us"]


def sweep_label(value) -> str:
    if isinstance(value, dict) and "name" in value:
        return str(value["name"])
    return json.dumps(value) if isinstance(value, (dict, list)) else str(value)


@dataclass
class SweepRow:
    value: object
    seed: int
    algo: str
    result: SimResult


def run_sweep(cfg: ExperimentConfig, out: Path, log=print) -> list[SweepRow]:
    """Run every (sweep value, seed) point; write one metrics CSV per point
    and algorithm, plus ``summary.csv`` and ``summary_by_seed.csv``."""
    if cfg.sweep is None:
        raise ConfigError("sweep: missing sweep specification")
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for idx, value in enumerate(cfg.sweep.values):
        point = apply_sweep_value(cfg, cfg.sweep.parameter, value)
        for seed in cfg.sweep.seeds:
            _, _, results = simulate(point, seed)
            for algo, res in results.items():
                write_csv(res.series, out / f"point{idx:02d}_{algo}_seed{seed}.csv")
                rows.append(SweepRow(value, seed, algo, res))
        log(f"  {cfg.sweep.parameter}={sweep_label(value)} done")

    with (out / "summary_by_seed.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_BY_SEED_HEADER)
        for r in rows:
            ratio = final_ratio(r.result)
            w.writerow([sweep_label(r.value), r.seed, r.algo, r.result.state.arrivals, r.result.state.accepts,
                        "" if ratio is None else format_fraction(ratio),
                        f"{mean_cpu_util(r.result):.6f}", f"{mean_decision_us(r.result):.1f}"])

    algos = algorithms_for(cfg)
    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep_value"] + [f"{a}_{col}" for a in algos
                                      for col in ("acceptance_ratio", "mean_util_cpu", "mean_decision_us")])
        for value in cfg.sweep.values:
            line = [sweep_label(value)]
            for a in algos:
                sel = [r.result for r in rows if r.value == value and r.algo == a]
                arrivals = sum(r.state.arrivals for r in sel)
                accepts = sum(r.state.accepts for r in sel)
                line.append(format_fraction(Fraction(accepts, arrivals)) if arrivals else "")
                line.append(f"{statistics.fmean(mean_cpu_util(r) for r in sel):.6f}")
                line.append(f"{statistics.fmean(mean_decision_us(r) for r in sel):.1f}")
            w.writerow(line)
    return rows
