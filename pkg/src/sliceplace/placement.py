"""Placement decisions and the constraint machinery shared by both solvers:
full validity check, cost model, and latency-bounded min-hop routing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .resource import Psn, link_key
from .slices import ACCESS, Nspr


@dataclass
class Placement:
    nspr_id: int
    vnf_host: dict[int, int] = field(default_factory=dict)
    vlink_path: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def hosts(self) -> tuple[int, ...]:
        return tuple(self.vnf_host[i] for i in sorted(self.vnf_host))

    def paths(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.vlink_path[i]) for i in sorted(self.vlink_path))

    def to_dict(self, cost: Optional["Cost"] = None) -> dict:
        out = {
            "nspr": self.nspr_id,
            "hosts": {str(k): v for k, v in sorted(self.vnf_host.items())},
            "paths": {str(k): list(v) for k, v in sorted(self.vlink_path.items())},
        }
        if cost is not None:
            out["cost"] = {"node_term": cost.node_term, "bw_hop_term": cost.bw_hop_term,
                           "total": cost.total}
        return out

    def to_json(self, cost: Optional["Cost"] = None) -> str:
        return json.dumps(self.to_dict(cost), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "Placement":
        return cls(d["nspr"], {int(k): v for k, v in d["hosts"].items()},
                   {int(k): tuple(v) for k, v in d["paths"].items()})


class ViolationKind(str, Enum):
    UNMAPPED_VNF = "UnmappedVnf"
    BROKEN_PATH = "BrokenPath"
    NODE_CPU = "NodeCpu"
    NODE_RAM = "NodeRam"
    LINK_BW = "LinkBw"
    VLINK_LATENCY = "VlinkLatency"
    E2E_LATENCY = "E2eLatency"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    ref: object = None  # server id, link key, vlink/VNF index, or None for E2E

    def __repr__(self):
        return f"{self.kind.value}({'' if self.ref is None else self.ref})"

    __str__ = __repr__


@dataclass(frozen=True)
class Cost:
    node_term: int
    bw_hop_term: int

    @property
    def total(self) -> int:
        return self.node_term + self.bw_hop_term


def vlink_endpoints(nspr: Nspr, hosts: dict[int, int], idx: int):
    vl = nspr.vlinks[idx]
    src = nspr.access_node if vl.src == ACCESS else hosts.get(vl.src)
    return src, hosts.get(vl.dst)


def path_latency(psn: Psn, path) -> int:
    return sum(psn.links[link_key(u, v)].latency for u, v in zip(path, path[1:]))


def _path_is_sound(psn: Psn, path, src, dst) -> bool:
    if src == dst:
        return len(path) == 0
    if len(path) < 2 or path[0] != src or path[-1] != dst:
        return False
    if len(set(path)) != len(path):
        return False
    return all(link_key(u, v) in psn.links for u, v in zip(path, path[1:]))


def validate_placement(psn: Psn, nspr: Nspr, placement: Placement) -> list[Violation]:
    """Every constraint the placement breaks against the current residuals;
    empty means the placement can be committed."""
    out = []
    hosts = placement.vnf_host
    for v in nspr.vnfs:
        if hosts.get(v.index) not in psn.servers:
            out.append(Violation(ViolationKind.UNMAPPED_VNF, v.index))
    sound = {}
    for i in range(len(nspr.vlinks)):
        src, dst = vlink_endpoints(nspr, hosts, i)
        if src is None or dst is None or dst not in psn.servers:
            continue  # already reported as unmapped
        path = placement.vlink_path.get(i)
        if path is None or not _path_is_sound(psn, path, src, dst):
            out.append(Violation(ViolationKind.BROKEN_PATH, i))
        else:
            sound[i] = tuple(path)

    cpu, ram = {}, {}
    for v in nspr.vnfs:
        h = hosts.get(v.index)
        if h in psn.servers:
            cpu[h] = cpu.get(h, 0) + v.cpu_req
            ram[h] = ram.get(h, 0) + v.ram_req
    for h in sorted(cpu):
        if cpu[h] > psn.servers[h].cpu_free:
            out.append(Violation(ViolationKind.NODE_CPU, h))
        if ram[h] > psn.servers[h].ram_free:
            out.append(Violation(ViolationKind.NODE_RAM, h))

    bw = {}
    for i, path in sound.items():
        for u, v in zip(path, path[1:]):
            key = link_key(u, v)
            bw[key] = bw.get(key, 0) + nspr.vlinks[i].bw_req
    for key in sorted(bw):
        if bw[key] > psn.links[key].bw_free:
            out.append(Violation(ViolationKind.LINK_BW, key))

    total = 0
    for i in sorted(sound):
        lat = path_latency(psn, sound[i])
        total += lat
        if lat > nspr.vlinks[i].lat_req:
            out.append(Violation(ViolationKind.VLINK_LATENCY, i))
    if len(sound) == len(nspr.vlinks) and total > nspr.e2e_latency:
        out.append(Violation(ViolationKind.E2E_LATENCY))
    return out


def placement_cost(psn: Psn, nspr: Nspr, placement: Placement) -> Cost:
    node_term = 0
    for v in nspr.vnfs:
        s = psn.servers[placement.vnf_host[v.index]]
        node_term += v.cpu_req * s.cpu_weight + v.ram_req * s.ram_weight
    bw_hop_term = 0
    for i, vl in enumerate(nspr.vlinks):
        path = placement.vlink_path.get(i, ())
        bw_hop_term += vl.bw_req * max(0, len(path) - 1)
    return Cost(node_term, bw_hop_term)


def constrained_shortest_path(psn: Psn, src: int, dst: int, bw_req: int, lat_bound: int):
    """Fewest-hop simple path from ``src`` to ``dst`` over links with at
    least ``bw_req`` residual bandwidth and total latency <= ``lat_bound``.

    Ties go to lower latency, then to the lexicographically smallest node
    sequence. Returns ``(path, latency, hops)`` or None; ``src == dst``
    gives ``((), 0, 0)``.

    Hop-layered label search: one label per node per layer, and a label is
    only kept if it beats the latency that node reached in earlier layers.
    A min-hop walk is always simple, so no explicit cycle check is needed.
    """
    if src == dst:
        return (), 0, 0
    adj, links = psn.adj, psn.links
    # static latency to dst: labels that cannot make the bound anyway are dropped
    to_dst = psn.min_latency_from(dst)
    if to_dst.get(src, lat_bound + 1) > lat_bound:
        return None
    settled = {src: 0}
    frontier = {src: (0, (src,))}
    while frontier:
        layer = {}
        for u, (lat_u, path_u) in frontier.items():
            for v in adj[u]:
                link = links[(u, v) if u < v else (v, u)]
                if link.bw_cap - link.bw_used < bw_req:
                    continue
                lat = lat_u + link.latency
                if lat + to_dst.get(v, lat_bound + 1) > lat_bound:
                    continue
                prev = settled.get(v)
                if prev is not None and prev <= lat:
                    continue
                cand = (lat, path_u + (v,))
                cur = layer.get(v)
                if cur is None or cand < cur:
                    layer[v] = cand
        if dst in layer:
            lat, path = layer[dst]
            return path, lat, len(path) - 1
        for v, (lat, _) in layer.items():
            settled[v] = lat
        frontier = layer
    return None
