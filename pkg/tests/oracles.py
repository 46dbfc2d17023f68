"""Independent reference implementations used as test oracles.

These deliberately avoid the package's own search code: simple paths come
from networkx, feasibility and cost are recomputed from scratch.
"""

import itertools
import random

import networkx as nx

from sliceplace.resource import DcType, Psn
from sliceplace.slices import Nspr


def to_nx(psn: Psn) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(psn.adj)
    for (a, b), link in psn.links.items():
        g.add_edge(a, b, bw_free=link.bw_cap - link.bw_used, latency=link.latency)
    return g


def _edges(path):
    return [(min(u, v), max(u, v)) for u, v in zip(path, path[1:])]


def _latency(g, path):
    return sum(g.edges[u, v]["latency"] for u, v in zip(path, path[1:]))


def simple_paths(g, src, dst, cutoff=None):
    if src == dst:
        return [()]
    return [tuple(p) for p in nx.all_simple_paths(g, src, dst, cutoff=cutoff)]


def brute_force_route(psn: Psn, src, dst, bw, lat_bound):
    """Best (hops, latency, path) over every simple path, or None."""
    g = to_nx(psn)
    best = None
    for p in simple_paths(g, src, dst):
        if any(g.edges[u, v]["bw_free"] < bw for u, v in zip(p, p[1:])):
            continue
        lat = _latency(g, p)
        if lat > lat_bound:
            continue
        cand = (max(0, len(p) - 1), lat, p)
        if best is None or cand < best:
            best = cand
    return best


def brute_force_placement(psn: Psn, nspr: Nspr, hop_bound=None):
    """Exhaustive minimum over every host vector and every combination of
    simple paths. Returns (cost, hosts, paths) or None."""
    g = to_nx(psn)
    servers = sorted(psn.servers)
    n = len(nspr.vnfs)
    best = None
    for hosts in itertools.product(servers, repeat=n):
        cpu, ram = {}, {}
        for v, h in zip(nspr.vnfs, hosts):
            cpu[h] = cpu.get(h, 0) + v.cpu_req
            ram[h] = ram.get(h, 0) + v.ram_req
        if any(cpu[h] > psn.servers[h].cpu_cap - psn.servers[h].cpu_used
               or ram[h] > psn.servers[h].ram_cap - psn.servers[h].ram_used for h in cpu):
            continue
        node_cost = sum(v.cpu_req * psn.servers[h].cpu_weight + v.ram_req * psn.servers[h].ram_weight
                        for v, h in zip(nspr.vnfs, hosts))
        options = []
        for i, vl in enumerate(nspr.vlinks):
            src = nspr.access_node if i == 0 else hosts[i - 1]
            opts = []
            for p in simple_paths(g, src, hosts[i], cutoff=hop_bound):
                lat = _latency(g, p)
                if lat <= vl.lat_req and all(g.edges[u, v]["bw_free"] >= vl.bw_req for u, v in zip(p, p[1:])):
                    opts.append((p, lat))
            if not opts:
                break
            options.append(opts)
        else:
            for combo in itertools.product(*options):
                if sum(lat for _, lat in combo) > nspr.e2e_latency:
                    continue
                load = {}
                for (p, _), vl in zip(combo, nspr.vlinks):
                    for e in _edges(p):
                        load[e] = load.get(e, 0) + vl.bw_req
                if any(load[e] > g.edges[e]["bw_free"] for e in load):
                    continue
                cost = node_cost + sum(vl.bw_req * max(0, len(p) - 1) for (p, _), vl in zip(combo, nspr.vlinks))
                paths = tuple(p for p, _ in combo)
                cand = (cost, hosts, paths)
                if best is None or cand < best:
                    best = cand
    return best


def random_instance(rng: random.Random, max_nodes=8, max_vnfs=4, extra_edges=2, load=False):
    """Small random connected substrate (mostly servers, maybe a switch or
    two) with a random chain request anchored at a random node."""
    n = rng.randint(2, max_nodes)
    psn = Psn()
    psn.add_dc(0, DcType.EDC)
    kinds = ["server" if rng.random() < 0.8 else "switch" for _ in range(n)]
    kinds[rng.randrange(n)] = "server"
    for i, kind in enumerate(kinds):
        if kind == "server":
            psn.add_server(i, 0, rng.randint(1, 10), rng.randint(1, 10),
                           rng.randint(0, 3), rng.randint(0, 3))
        else:
            psn.add_switch(i, 0, is_access=True)
    for i in range(1, n):
        psn.add_link(i, rng.randrange(i), rng.randint(1, 10), rng.randint(0, 10))
    for _ in range(rng.randint(0, extra_edges)):
        a, b = rng.sample(range(n), 2)
        if psn.link(a, b) is None:
            psn.add_link(a, b, rng.randint(1, 10), rng.randint(0, 10))
    if load:
        for s in psn.servers.values():
            s.cpu_used = rng.randint(0, s.cpu_cap)
            s.ram_used = rng.randint(0, s.ram_cap)
        for l in psn.links.values():
            l.bw_used = rng.randint(0, l.bw_cap)
    k = rng.randint(1, max_vnfs)
    nspr = Nspr.chain(
        rng.randrange(1000),
        [(rng.randint(1, 5), rng.randint(0, 5)) for _ in range(k)],
        [(rng.randint(0, 5), rng.randint(5, 30)) for _ in range(k)],
        rng.randint(10, 60),
        rng.randrange(n),
    )
    return psn, nspr
