"""Online simulation: replay an event trace against a substrate, placing each
arriving slice and releasing it when it departs."""

from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

from .exact import ExactConfig, search_exact
from .metrics import MetricsSample, MetricsSeries, UtilizationIndex, config_hash
from .p2c import P2cConfig, solve_p2c
from .placement import placement_cost
from .resource import LedgerError, Psn, commit, link_key, release
from .slices import ARRIVAL, EventTrace

ALGORITHMS = ("exact", "p2c")


class SimulationError(RuntimeError):
    """Ledger incoherence detected mid-run; carries a JSON state dump."""

    def __init__(self, message, dump: str):
        super().__init__(message)
        self.dump = dump


@dataclass
class SimConfig:
    algorithm: str = "p2c"  # exact | p2c | both
    exact: ExactConfig = field(default_factory=ExactConfig)
    p2c: P2cConfig = field(default_factory=P2cConfig)
    sample_interval: int = 0  # ticks between periodic samples; 0 disables them
    seed: int = 0
    record_wall_time: bool = True  # False writes decision_us = 0, for byte-stable output
    check_every_event: bool = False  # full ledger recomputation after each event

    def validate(self):
        if self.algorithm not in (*ALGORITHMS, "both"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.sample_interval < 0:
            raise ValueError("sample_interval must be >= 0")
        self.exact.validate()
        self.p2c.validate()


@dataclass
class SimState:
    psn: Psn
    clock: int = 0
    active: dict = field(default_factory=dict)  # nspr_id -> (nspr, placement)
    arrivals: int = 0
    accepts: int = 0
    rejects: int = 0

    def recomputed_usage(self):
        cpu, ram, bw = {}, {}, {}
        for nspr, p in self.active.values():
            for i, h in p.vnf_host.items():
                cpu[h] = cpu.get(h, 0) + nspr.vnfs[i].cpu_req
                ram[h] = ram.get(h, 0) + nspr.vnfs[i].ram_req
            for i, path in p.vlink_path.items():
                for u, v in zip(path, path[1:]):
                    k = link_key(u, v)
                    bw[k] = bw.get(k, 0) + nspr.vlinks[i].bw_req
        return cpu, ram, bw

    def check_coherence(self):
        cpu, ram, bw = self.recomputed_usage()
        bad = [s.id for s in self.psn.servers.values()
               if s.cpu_used != cpu.get(s.id, 0) or s.ram_used != ram.get(s.id, 0)]
        bad_links = [k for k, l in self.psn.links.items() if l.bw_used != bw.get(k, 0)]
        if bad or bad_links:
            raise SimulationError(
                f"t={self.clock}: ledger disagrees with active slices "
                f"(servers {bad[:5]}, links {bad_links[:5]})", self.dump())
        self.psn.check_ledger()

    def dump(self) -> str:
        return json.dumps({
            "clock": self.clock,
            "counters": {"arrivals": self.arrivals, "accepts": self.accepts, "rejects": self.rejects},
            "psn": self.psn.to_dict(),
            "active": [p.to_dict() for _, (_, p) in sorted(self.active.items())],
        }, sort_keys=True)


@dataclass
class SimResult:
    series: MetricsSeries
    state: SimState
    decisions: list[dict]
    placements: list = field(default_factory=list)  # (placement, cost) per accepted slice

    def decision_log(self) -> str:
        return "".join(json.dumps(d, sort_keys=True, separators=(",", ":")) + "\n" for d in self.decisions)

    def placement_log(self) -> str:
        return "".join(p.to_json(c) + "\n" for p, c in self.placements)


def _decide(algorithm, psn, nspr, cfg: SimConfig, rng):
    if algorithm == "exact":
        return search_exact(psn, nspr, cfg.exact).placement
    return solve_p2c(psn, nspr, cfg.p2c, rng)


def run_simulation(psn: Psn, trace: EventTrace, cfg: SimConfig,
                   algorithm: Optional[str] = None) -> SimResult:
    """Replay ``trace`` on ``psn`` (mutated in place) with one algorithm.

    Events after the trace horizon are not processed, so slices still active
    at the horizon keep their resources.
    """
    cfg.validate()
    algorithm = algorithm or cfg.algorithm
    if algorithm not in ALGORITHMS:
        raise ValueError("run_simulation needs a single algorithm; use replay_compare for 'both'")
    state = SimState(psn)
    util = UtilizationIndex(psn)
    rng = random.Random(cfg.seed)
    meta = {"algorithm": algorithm, "seed": cfg.seed,
            "config_hash": config_hash({"cfg": asdict(cfg), "algorithm": algorithm})}
    series = MetricsSeries(meta=meta)
    decisions = []
    placements = []
    last_us = 0

    def sample(t):
        series.samples.append(MetricsSample(t, state.arrivals, state.accepts, state.rejects,
                                            util(psn), last_us))

    sample(0)
    tick = cfg.sample_interval
    next_tick = tick if tick else None
    for ev in trace.events:
        if ev.t > trace.horizon:
            break
        while next_tick is not None and next_tick < ev.t:
            sample(next_tick)
            next_tick += tick
        state.clock = ev.t
        if ev.kind == ARRIVAL:
            nspr = ev.nspr
            state.arrivals += 1
            t0 = time.perf_counter_ns()
            placement = _decide(algorithm, psn, nspr, cfg, rng)
            elapsed = (time.perf_counter_ns() - t0) // 1000
            last_us = elapsed if cfg.record_wall_time else 0
            cost = None
            if placement is None:
                state.rejects += 1
            else:
                full_cost = placement_cost(psn, nspr, placement)
                cost = full_cost.total
                try:
                    commit(psn, nspr, placement)
                except LedgerError as exc:
                    raise SimulationError(f"t={ev.t}: {exc}", state.dump()) from exc
                state.active[nspr.id] = (nspr, placement)
                state.accepts += 1
                placements.append((placement, full_cost))
            decisions.append({"t": ev.t, "nspr": nspr.id, "algo": algorithm,
                              "accepted": placement is not None, "cost": cost, "decision_us": last_us})
        else:
            entry = state.active.pop(ev.nspr_id, None)
            if entry is None:
                continue  # rejected slice: its departure is dropped
            try:
                release(psn, entry[1])
            except LedgerError as exc:
                raise SimulationError(f"t={ev.t}: {exc}", state.dump()) from exc
        if cfg.check_every_event:
            state.check_coherence()
        sample(ev.t)
    while next_tick is not None and next_tick <= trace.horizon:
        sample(next_tick)
        next_tick += tick
    state.check_coherence()
    return SimResult(series, state, decisions, placements)


@dataclass
class CompareResult:
    results: dict[str, SimResult]

    def decision_log(self) -> str:
        """Per-arrival records of both algorithms, interleaved by arrival."""
        rows = []
        for algo in ALGORITHMS:
            for i, d in enumerate(self.results[algo].decisions):
                rows.append((i, ALGORITHMS.index(algo), d))
        rows.sort(key=lambda r: (r[0], r[1]))
        return "".join(json.dumps(d, sort_keys=True, separators=(",", ":")) + "\n" for _, _, d in rows)


def replay_compare(psn: Psn, trace: EventTrace, cfg_exact: SimConfig, cfg_p2c: SimConfig) -> CompareResult:
    """Run both algorithms on independent clones of ``psn`` with the same trace."""
    return CompareResult({
        "exact": run_simulation(psn.clone(), trace, cfg_exact, "exact"),
        "p2c": run_simulation(psn.clone(), trace, cfg_p2c, "p2c"),
    })
