"""Exact placement by depth-first branch-and-bound.

Finds a minimum-cost placement over every host assignment and every simple
path of at most ``hop_bound`` hops per virtual link. Intended for small
substrates only; the search is exponential in chain length.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional

from .placement import Cost, Placement, placement_cost, validate_placement
from .resource import Psn, link_key
from .slices import Nspr

log = logging.getLogger(__name__)


@dataclass
class ExactConfig:
    hop_bound: Optional[int] = None  # None means unbounded
    time_budget: Optional[float] = None  # seconds

    def validate(self):
        if self.hop_bound is not None and self.hop_bound < 1:
            raise ValueError("hop_bound must be >= 1 (or None for unbounded)")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be positive")


@dataclass
class ExactOutcome:
    placement: Optional[Placement]
    cost: Optional[Cost]
    exhausted: bool = False
    nodes: int = 0


class _Budget(Exception):
    pass


def _simple_paths(psn: Psn, src, dst, bw, lat_bound, max_hops):
    """All simple paths src->dst with bandwidth headroom >= bw, latency <=
    lat_bound and at most max_hops hops, as (hops, latency, path)."""
    if src == dst:
        return [(0, 0, ())]
    to_dst = psn.min_latency_from(dst)
    if to_dst.get(src, lat_bound + 1) > lat_bound or max_hops < 1:
        return []
    found = []
    path = [src]
    on_path = {src}

    def extend(u, lat):
        if len(path) - 1 >= max_hops:
            return
        for v in psn.adj[u]:
            if v in on_path:
                continue
            link = psn.links[link_key(u, v)]
            if link.bw_cap - link.bw_used < bw:
                continue
            nlat = lat + link.latency
            if nlat + to_dst.get(v, lat_bound + 1) > lat_bound:
                continue
            path.append(v)
            if v == dst:
                found.append((len(path) - 1, nlat, tuple(path)))
            else:
                on_path.add(v)
                extend(v, nlat)
                on_path.discard(v)
            path.pop()

    extend(src, 0)
    found.sort()
    return found


def search_exact(psn: Psn, nspr: Nspr, cfg: Optional[ExactConfig] = None) -> ExactOutcome:
    cfg = cfg or ExactConfig()
    cfg.validate()
    n = len(nspr.vnfs)
    servers = psn.server_ids()
    hop_cap = cfg.hop_bound if cfg.hop_bound is not None else len(psn.adj)
    deadline = None if cfg.time_budget is None else time.perf_counter() + cfg.time_budget

    # admissible bound on the node cost of VNFs i..n-1
    cheapest = [min(v.cpu_req * psn.servers[s].cpu_weight + v.ram_req * psn.servers[s].ram_weight
                    for s in servers) for v in nspr.vnfs]
    rest = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        rest[i] = rest[i + 1] + cheapest[i]

    best = {"cost": None, "key": None, "hosts": None, "paths": None}
    hosts: list[int] = []
    paths: list[tuple] = []
    stats = {"nodes": 0}

    def over(total):
        return best["cost"] is not None and total > best["cost"]

    def dfs(i, anchor, cost, remaining):
        stats["nodes"] += 1
        if deadline is not None and time.perf_counter() > deadline:
            raise _Budget
        if i == n:
            key = (tuple(hosts), tuple(paths))
            if best["cost"] is None or cost < best["cost"] or (cost == best["cost"] and key < best["key"]):
                best.update(cost=cost, key=key, hosts=list(hosts), paths=list(paths))
            return
        vnf, vl = nspr.vnfs[i], nspr.vlinks[i]
        bound = min(vl.lat_req, remaining)
        for s in servers:
            srv = psn.servers[s]
            if srv.cpu_cap - srv.cpu_used < vnf.cpu_req or srv.ram_cap - srv.ram_used < vnf.ram_req:
                continue
            node_cost = vnf.cpu_req * srv.cpu_weight + vnf.ram_req * srv.ram_weight
            base = cost + node_cost + rest[i + 1]
            if over(base):
                continue
            max_hops = hop_cap
            if vl.bw_req > 0 and best["cost"] is not None:
                max_hops = min(max_hops, (best["cost"] - base) // vl.bw_req)
            psn.adjust_node(s, vnf.cpu_req, vnf.ram_req)
            try:
                for hops, lat, path in _simple_paths(psn, anchor, s, vl.bw_req, bound, max_hops):
                    if over(base + vl.bw_req * hops):
                        break
                    psn.adjust_path(path, vl.bw_req)
                    hosts.append(s)
                    paths.append(path)
                    try:
                        dfs(i + 1, s, cost + node_cost + vl.bw_req * hops, remaining - lat)
                    finally:
                        hosts.pop()
                        paths.pop()
                        psn.adjust_path(path, -vl.bw_req)
            finally:
                psn.adjust_node(s, -vnf.cpu_req, -vnf.ram_req)

    exhausted = False
    try:
        dfs(0, nspr.access_node, 0, nspr.e2e_latency)
    except _Budget:
        exhausted = True
        log.warning("exact search for slice %s hit its time budget after %d nodes",
                    nspr.id, stats["nodes"])
    if best["cost"] is None:
        return ExactOutcome(None, None, exhausted, stats["nodes"])
    placement = Placement(nspr.id, dict(enumerate(best["hosts"])), dict(enumerate(best["paths"])))
    violations = validate_placement(psn, nspr, placement)
    if violations:
        raise AssertionError(f"exact solver produced an invalid placement: {violations}")
    return ExactOutcome(placement, placement_cost(psn, nspr, placement), exhausted, stats["nodes"])


def solve_exact(psn: Psn, nspr: Nspr, cfg: Optional[ExactConfig] = None) -> Optional[Placement]:
    """Minimum-cost placement, or None when the request cannot be placed."""
    return search_exact(psn, nspr, cfg).placement
