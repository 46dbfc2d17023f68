"""Slice requests (linear VNF chains anchored at an access switch), the
random request generator and the Poisson arrival/departure trace."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .resource import Psn

ACCESS = -1  # virtual-link endpoint standing for the user access node


@dataclass(frozen=True)
class Vnf:
    index: int
    cpu_req: int
    ram_req: int

    def __post_init__(self):
        if self.cpu_req < 0 or self.ram_req < 0 or (self.cpu_req == 0 and self.ram_req == 0):
            raise ValueError(f"VNF {self.index}: requirements must be non-negative and not both zero")


@dataclass(frozen=True)
class VirtualLink:
    src: int
    dst: int
    bw_req: int
    lat_req: int

    def __post_init__(self):
        if self.bw_req < 0 or self.lat_req < 0:
            raise ValueError(f"virtual link {self.src}->{self.dst}: negative requirement")


@dataclass(frozen=True)
class Nspr:
    id: int
    vnfs: tuple[Vnf, ...]
    vlinks: tuple[VirtualLink, ...]
    e2e_latency: int
    access_node: int
    arrival_time: int = 0
    holding_time: int = 1

    def __post_init__(self):
        if not self.vnfs:
            raise ValueError("a slice needs at least one VNF")
        if len(self.vlinks) != len(self.vnfs):
            raise ValueError("a chain of n VNFs has exactly n virtual links (access leg included)")
        for i, vl in enumerate(self.vlinks):
            if (vl.src, vl.dst) != (ACCESS if i == 0 else i - 1, i):
                raise ValueError(f"virtual link {i} does not follow the chain order")
        if self.e2e_latency < 0:
            raise ValueError("negative end-to-end latency budget")
        if self.holding_time <= 0:
            raise ValueError("holding time must be positive")

    @classmethod
    def chain(cls, id, vnf_reqs, vlink_reqs, e2e_latency, access_node, arrival_time=0, holding_time=1):
        """Build from ``[(cpu, ram), ...]`` and ``[(bw, lat), ...]`` where the
        first virtual link is the access leg."""
        vnfs = tuple(Vnf(i, c, r) for i, (c, r) in enumerate(vnf_reqs))
        vlinks = tuple(VirtualLink(ACCESS if i == 0 else i - 1, i, bw, lat)
                       for i, (bw, lat) in enumerate(vlink_reqs))
        return cls(id, vnfs, vlinks, e2e_latency, access_node, arrival_time, holding_time)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "vnfs": [[v.cpu_req, v.ram_req] for v in self.vnfs],
            "vlinks": [[l.bw_req, l.lat_req] for l in self.vlinks],
            "e2e_latency": self.e2e_latency,
            "access_node": self.access_node,
            "arrival_time": self.arrival_time,
            "holding_time": self.holding_time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Nspr":
        return cls.chain(d["id"], d["vnfs"], d["vlinks"], d["e2e_latency"], d["access_node"],
                         d.get("arrival_time", 0), d.get("holding_time", 1))


@dataclass
class NsprParams:
    chain_len: tuple[int, int] = (2, 5)
    cpu: tuple[int, int] = (1, 8)
    ram: tuple[int, int] = (1, 16)
    bw: tuple[int, int] = (1, 20)
    vlink_latency: tuple[int, int] = (600, 3_000)
    e2e_latency: tuple[int, int] = (1_500, 6_000)
    mean_holding: float = 50.0  # time units
    ticks_per_unit: int = 1_000

    def validate(self):
        for name in ("chain_len", "cpu", "ram", "bw", "vlink_latency", "e2e_latency"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise ValueError(f"{name}: empty or negative range [{lo}, {hi}]")
        if self.chain_len[0] < 1:
            raise ValueError("chain_len: a slice needs at least one VNF")
        if self.cpu[0] == 0 and self.ram[0] == 0:
            raise ValueError("cpu/ram: ranges would allow a VNF with no requirements")
        if not self.mean_holding > 0:
            raise ValueError("mean_holding must be positive")
        if self.ticks_per_unit < 1:
            raise ValueError("ticks_per_unit must be >= 1")

    def to_ticks(self, t: float) -> int:
        return int(t * self.ticks_per_unit)


def generate_nspr(params: NsprParams, psn: Psn, rng: random.Random, nspr_id: int = 0,
                  arrival_time: int = 0) -> Nspr:
    params.validate()
    access = psn.access_switches()
    if not access:
        raise ValueError("substrate has no access switch")
    n = rng.randint(*params.chain_len)
    vnfs = [(rng.randint(*params.cpu), rng.randint(*params.ram)) for _ in range(n)]
    vlinks = [(rng.randint(*params.bw), rng.randint(*params.vlink_latency)) for _ in range(n)]
    e2e = rng.randint(*params.e2e_latency)
    anchor = rng.choice(access)
    holding = max(1, round(rng.expovariate(1.0 / params.mean_holding) * params.ticks_per_unit))
    return Nspr.chain(nspr_id, vnfs, vlinks, e2e, anchor, arrival_time, holding)


ARRIVAL = "arrival"
DEPARTURE = "departure"


@dataclass(frozen=True)
class Event:
    t: int
    kind: str
    nspr_id: int
    nspr: Optional[Nspr] = None

    def sort_key(self):
        return (self.t, 0 if self.kind == DEPARTURE else 1, self.nspr_id)

    def to_json(self) -> str:
        if self.kind == ARRIVAL:
            obj = {"t": self.t, "kind": ARRIVAL, "nspr": self.nspr.to_dict()}
        else:
            obj = {"t": self.t, "kind": DEPARTURE, "id": self.nspr_id}
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Event":
        obj = json.loads(line)
        if obj["kind"] == ARRIVAL:
            nspr = Nspr.from_dict(obj["nspr"])
            return cls(obj["t"], ARRIVAL, nspr.id, nspr)
        return cls(obj["t"], DEPARTURE, obj["id"])


@dataclass
class EventTrace:
    events: list[Event] = field(default_factory=list)
    horizon: int = 0

    @property
    def arrivals(self) -> list[Nspr]:
        return [e.nspr for e in self.events if e.kind == ARRIVAL]

    def check(self):
        """Raise if the trace is unsorted or arrivals/departures don't pair up."""
        keys = [e.sort_key() for e in self.events]
        if keys != sorted(keys):
            raise ValueError("trace events out of order")
        arrived = {}
        for e in self.events:
            if e.kind == ARRIVAL:
                if e.nspr_id in arrived:
                    raise ValueError(f"slice {e.nspr_id} arrives twice")
                arrived[e.nspr_id] = e.nspr
            else:
                nspr = arrived.pop(e.nspr_id, None)
                if nspr is None:
                    raise ValueError(f"departure of slice {e.nspr_id} without prior arrival")
                if e.t != nspr.arrival_time + nspr.holding_time:
                    raise ValueError(f"slice {e.nspr_id} departs at the wrong time")
        if arrived:
            raise ValueError(f"slices {sorted(arrived)} never depart")

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)

    def save_jsonl(self, path):
        path = Path(path)
        try:
            path.write_text(self.to_jsonl())
        except OSError as exc:
            raise OSError(f"cannot write trace to {path}: {exc}") from exc

    @classmethod
    def from_jsonl(cls, text: str, horizon: int) -> "EventTrace":
        return cls([Event.from_json(line) for line in text.splitlines() if line.strip()], horizon)


def generate_trace(params: NsprParams, arrival_rate: float, horizon: float, psn: Psn,
                   seed: int) -> EventTrace:
    """Poisson arrivals over ``[0, horizon)`` (time units), each paired with its
    departure, which may fall past the horizon. Event times are integer ticks."""
    params.validate()
    if arrival_rate < 0:
        raise ValueError("arrival_rate must be non-negative")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    rng = random.Random(seed)
    events = []
    t = 0.0
    nspr_id = 0
    while arrival_rate > 0:
        t += rng.expovariate(arrival_rate)
        if t >= horizon:
            break
        tick = params.to_ticks(t)
        nspr = generate_nspr(params, psn, rng, nspr_id, tick)
        events.append(Event(tick, ARRIVAL, nspr_id, nspr))
        events.append(Event(tick + nspr.holding_time, DEPARTURE, nspr_id))
        nspr_id += 1
    events.sort(key=Event.sort_key)
    return EventTrace(events, params.to_ticks(horizon))


def nspr_to_dot(nspr: Nspr) -> str:
    lines = [f"digraph nspr{nspr.id} {{", f'  access [shape=ellipse, label="access {nspr.access_node}"];']
    for v in nspr.vnfs:
        lines.append(f'  v{v.index} [shape=box, label="{v.cpu_req}/{v.ram_req}"];')
    for vl in nspr.vlinks:
        src = "access" if vl.src == ACCESS else f"v{vl.src}"
        lines.append(f'  {src} -> v{vl.dst} [label="{vl.bw_req},{vl.lat_req}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
