"""Power-of-Two-Choices placement heuristic.

VNFs are placed one by one along the chain. For each VNF two servers are
drawn uniformly from those with enough CPU/RAM that can be reached within
the remaining latency budget; each is routed from the previous VNF's host
and the cheaper one wins.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .placement import Placement, constrained_shortest_path, validate_placement
from .resource import Psn
from .slices import Nspr


class PlacementInvariantError(RuntimeError):
    pass


@dataclass
class P2cConfig:
    seed: int = 0
    resample_attempts: int = 4
    backtrack_budget: int = 0
    # 2 is the algorithm; 1 exists only as the single-choice ablation
    choices: int = 2

    def validate(self):
        if self.resample_attempts < 1:
            raise ValueError("resample_attempts must be >= 1")
        if self.backtrack_budget < 0:
            raise ValueError("backtrack_budget must be >= 0")
        if self.choices not in (1, 2):
            raise ValueError("choices must be 2 (or 1 for the ablation)")


def sample_candidates(pool: list[int], rng: random.Random, k: int = 2) -> list[int]:
    """Up to ``k`` distinct servers drawn uniformly from ``pool``."""
    return rng.sample(pool, min(k, len(pool)))


def _prefilter(psn: Psn, vnf, anchor, budget, excluded):
    reach = psn.min_latency_from(anchor)
    out = []
    for s, srv in psn.servers.items():
        if (srv.cpu_cap - srv.cpu_used >= vnf.cpu_req and srv.ram_cap - srv.ram_used >= vnf.ram_req
                and reach.get(s, budget + 1) <= budget and s not in excluded):
            out.append(s)
    out.sort()
    return out


def _place_one(psn, vnf, vl, anchor, remaining, excluded, cfg, rng):
    pool = _prefilter(psn, vnf, anchor, remaining, excluded)
    if not pool:
        return None
    queue = sample_candidates(pool, rng, cfg.choices)
    picked = set(queue)
    unsampled = [s for s in pool if s not in picked]
    bound = min(vl.lat_req, remaining)
    survivors = []
    resamples = 0
    while queue:
        s = queue.pop(0)
        route = constrained_shortest_path(psn, anchor, s, vl.bw_req, bound)
        if route is not None:
            path, lat, hops = route
            srv = psn.servers[s]
            inc = vnf.cpu_req * srv.cpu_weight + vnf.ram_req * srv.ram_weight + vl.bw_req * hops
            survivors.append((inc, s, path, lat))
        elif resamples < cfg.resample_attempts and unsampled:
            resamples += 1
            queue.append(unsampled.pop(rng.randrange(len(unsampled))))
    if not survivors:
        return None
    _, s, path, lat = min(survivors, key=lambda c: (c[0], c[1]))
    return s, path, lat


def solve_p2c(psn: Psn, nspr: Nspr, cfg: Optional[P2cConfig] = None,
              rng: Optional[random.Random] = None) -> Optional[Placement]:
    """Place ``nspr`` or return None (rejection). ``rng`` defaults to a fresh
    generator seeded from ``cfg.seed``; pass one in to share a stream."""
    cfg = cfg or P2cConfig()
    cfg.validate()
    if rng is None:
        rng = random.Random(cfg.seed)
    n = len(nspr.vnfs)
    steps = []  # (host, path, latency) per placed VNF, tentatively reserved
    excluded = [set() for _ in range(n)]
    backtracks = cfg.backtrack_budget
    remaining = nspr.e2e_latency
    try:
        while len(steps) < n:
            i = len(steps)
            anchor = nspr.access_node if i == 0 else steps[-1][0]
            vnf, vl = nspr.vnfs[i], nspr.vlinks[i]
            choice = _place_one(psn, vnf, vl, anchor, remaining, excluded[i], cfg, rng)
            if choice is None:
                if backtracks > 0 and i > 0:
                    backtracks -= 1
                    host, path, lat = steps.pop()
                    prev = nspr.vnfs[i - 1]
                    psn.adjust_node(host, -prev.cpu_req, -prev.ram_req)
                    psn.adjust_path(path, -nspr.vlinks[i - 1].bw_req)
                    remaining += lat
                    excluded[i - 1].add(host)
                    excluded[i].clear()
                    continue
                return None
            host, path, lat = choice
            psn.adjust_node(host, vnf.cpu_req, vnf.ram_req)
            psn.adjust_path(path, vl.bw_req)
            remaining -= lat
            steps.append(choice)
    finally:
        for i, (host, path, _) in enumerate(steps):
            psn.adjust_node(host, -nspr.vnfs[i].cpu_req, -nspr.vnfs[i].ram_req)
            psn.adjust_path(path, -nspr.vlinks[i].bw_req)

    placement = Placement(nspr.id, {i: s[0] for i, s in enumerate(steps)},
                          {i: s[1] for i, s in enumerate(steps)})
    violations = validate_placement(psn, nspr, placement)
    if violations:
        raise PlacementInvariantError(f"P2C produced an invalid placement for slice {nspr.id}: {violations}")
    return placement
