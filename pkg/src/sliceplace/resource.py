"""Physical substrate network: nodes, links, residual ledger and the
hierarchical edge/core/cloud topology generator."""

from __future__ import annotations

import heapq
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Union

if TYPE_CHECKING:
    from .placement import Placement
    from .slices import Nspr


class DcType(str, Enum):
    EDC = "EDC"
    CDC = "CDC"
    CCP = "CCP"


# edge-most first; used for link-to-tier attribution
TIER_ORDER = (DcType.EDC, DcType.CDC, DcType.CCP)


class LedgerError(RuntimeError):
    """Raised on an invalid commit or a release of an unknown placement."""

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


@dataclass
class ServerNode:
    id: int
    dc_id: int
    cpu_cap: int
    ram_cap: int
    cpu_used: int = 0
    ram_used: int = 0
    cpu_weight: int = 1
    ram_weight: int = 1

    @property
    def cpu_free(self) -> int:
        return self.cpu_cap - self.cpu_used

    @property
    def ram_free(self) -> int:
        return self.ram_cap - self.ram_used


@dataclass
class SwitchNode:
    id: int
    dc_id: Optional[int] = None
    is_access: bool = False


@dataclass
class PhysicalLink:
    a: int
    b: int
    bw_cap: int
    latency: int
    bw_used: int = 0

    @property
    def key(self) -> tuple[int, int]:
        return link_key(self.a, self.b)

    @property
    def bw_free(self) -> int:
        return self.bw_cap - self.bw_used


def link_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


Node = Union[ServerNode, SwitchNode]


class Psn:
    """Undirected substrate graph with a CPU/RAM/bandwidth usage ledger.

    Servers, switches and links are mutable records; ``commit`` and
    ``release`` are the only sanctioned way to move usage once a
    simulation is running.
    """

    def __init__(self):
        self.servers: dict[int, ServerNode] = {}
        self.switches: dict[int, SwitchNode] = {}
        self.links: dict[tuple[int, int], PhysicalLink] = {}
        self.dc_index: dict[int, tuple[DcType, list[int]]] = {}
        self.adj: dict[int, list[int]] = {}
        self.committed: dict[object, "Placement"] = {}
        # min-latency rows keyed by source; topology is static so clones share it
        self._latency_rows: dict[int, dict[int, int]] = {}

    # -- construction -----------------------------------------------------

    def add_dc(self, dc_id: int, dc_type: DcType):
        if dc_id in self.dc_index:
            raise ValueError(f"duplicate dc id {dc_id}")
        self.dc_index[dc_id] = (DcType(dc_type), [])

    def _add_node(self, node: Node):
        if node.id in self.adj:
            raise ValueError(f"duplicate node id {node.id}")
        if node.dc_id is not None:
            if node.dc_id not in self.dc_index:
                raise ValueError(f"node {node.id} refers to unknown dc {node.dc_id}")
            self.dc_index[node.dc_id][1].append(node.id)
        self.adj[node.id] = []
        self._latency_rows.clear()

    def add_server(self, id, dc_id, cpu_cap, ram_cap, cpu_weight=1, ram_weight=1) -> ServerNode:
        if cpu_cap < 0 or ram_cap < 0 or cpu_weight < 0 or ram_weight < 0:
            raise ValueError(f"server {id}: capacities and weights must be non-negative")
        node = ServerNode(id, dc_id, cpu_cap, ram_cap, cpu_weight=cpu_weight, ram_weight=ram_weight)
        self._add_node(node)
        self.servers[id] = node
        return node

    def add_switch(self, id, dc_id=None, is_access=False) -> SwitchNode:
        node = SwitchNode(id, dc_id, is_access)
        self._add_node(node)
        self.switches[id] = node
        return node

    def add_link(self, a, b, bw_cap, latency) -> PhysicalLink:
        if a == b:
            raise ValueError(f"self-loop on node {a}")
        if a not in self.adj or b not in self.adj:
            raise ValueError(f"link {a}-{b} refers to an unknown node")
        key = link_key(a, b)
        if key in self.links:
            raise ValueError(f"duplicate link {a}-{b}")
        if bw_cap < 0 or latency < 0:
            raise ValueError(f"link {a}-{b}: bandwidth and latency must be non-negative")
        link = PhysicalLink(a, b, bw_cap, latency)
        self.links[key] = link
        self.adj[a].append(b)
        self.adj[b].append(a)
        self.adj[a].sort()
        self.adj[b].sort()
        self._latency_rows.clear()
        return link

    # -- queries ----------------------------------------------------------

    def node(self, node_id: int) -> Node:
        if node_id in self.servers:
            return self.servers[node_id]
        return self.switches[node_id]

    def link(self, u: int, v: int) -> Optional[PhysicalLink]:
        return self.links.get(link_key(u, v))

    def access_switches(self) -> list[int]:
        return sorted(s.id for s in self.switches.values() if s.is_access)

    def tier_of(self, node_id: int) -> Optional[DcType]:
        dc_id = self.node(node_id).dc_id
        if dc_id is None:
            return None
        return self.dc_index[dc_id][0]

    def server_ids(self) -> list[int]:
        return sorted(self.servers)

    def is_connected(self) -> bool:
        if not self.adj:
            return True
        start = next(iter(self.adj))
        seen = {start}
        stack = [start]
        while stack:
            for nb in self.adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.adj)

    def min_latency_from(self, src: int) -> dict[int, int]:
        """Static (load-independent) shortest latency from ``src`` to every
        reachable node; computed once per source and cached."""
        row = self._latency_rows.get(src)
        if row is not None:
            return row
        dist = {src: 0}
        heap = [(0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v in self.adj[u]:
                nd = d + self.links[link_key(u, v)].latency
                if nd < dist.get(v, nd + 1):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        self._latency_rows[src] = dist
        return dist

    def clone(self) -> "Psn":
        other = Psn()
        other.servers = {k: ServerNode(**asdict(v)) for k, v in self.servers.items()}
        other.switches = {k: SwitchNode(**asdict(v)) for k, v in self.switches.items()}
        other.links = {k: PhysicalLink(**asdict(v)) for k, v in self.links.items()}
        other.dc_index = {k: (t, list(ids)) for k, (t, ids) in self.dc_index.items()}
        other.adj = {k: list(v) for k, v in self.adj.items()}
        other.committed = dict(self.committed)
        other._latency_rows = self._latency_rows
        return other

    def check_ledger(self):
        """Assert every usage value lies within [0, cap]."""
        for s in self.servers.values():
            if not (0 <= s.cpu_used <= s.cpu_cap and 0 <= s.ram_used <= s.ram_cap):
                raise LedgerError(f"server {s.id} ledger out of bounds: {s}")
        for l in self.links.values():
            if not 0 <= l.bw_used <= l.bw_cap:
                raise LedgerError(f"link {l.a}-{l.b} ledger out of bounds: {l}")

    # -- low-level ledger arithmetic, shared by commit/release and solvers --

    def adjust_node(self, server_id: int, cpu: int, ram: int):
        s = self.servers[server_id]
        s.cpu_used += cpu
        s.ram_used += ram

    def adjust_path(self, path, bw: int):
        for u, v in zip(path, path[1:]):
            self.links[link_key(u, v)].bw_used += bw

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dcs": [
                {"id": dc_id, "type": t.value, "members": sorted(ids)}
                for dc_id, (t, ids) in sorted(self.dc_index.items())
            ],
            "servers": [asdict(self.servers[k]) for k in sorted(self.servers)],
            "switches": [asdict(self.switches[k]) for k in sorted(self.switches)],
            "links": [asdict(self.links[k]) for k in sorted(self.links)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Psn":
        psn = cls()
        for dc in data["dcs"]:
            psn.add_dc(dc["id"], DcType(dc["type"]))
        for s in data["servers"]:
            node = psn.add_server(s["id"], s["dc_id"], s["cpu_cap"], s["ram_cap"],
                                  s.get("cpu_weight", 1), s.get("ram_weight", 1))
            node.cpu_used = s.get("cpu_used", 0)
            node.ram_used = s.get("ram_used", 0)
        for s in data["switches"]:
            psn.add_switch(s["id"], s.get("dc_id"), s.get("is_access", False))
        for l in data["links"]:
            psn.add_link(l["a"], l["b"], l["bw_cap"], l["latency"]).bw_used = l.get("bw_used", 0)
        return psn

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save_json(self, path):
        path = Path(path)
        try:
            path.write_text(self.to_json() + "\n")
        except OSError as exc:
            raise OSError(f"cannot write PSN to {path}: {exc}") from exc

    def summary(self) -> str:
        counts = {t: 0 for t in DcType}
        for t, _ in self.dc_index.values():
            counts[t] += 1
        return (f"{len(self.dc_index)} DCs ({counts[DcType.EDC]} EDC / {counts[DcType.CDC]} CDC / "
                f"{counts[DcType.CCP]} CCP), {len(self.servers)} servers, "
                f"{len(self.switches)} switches, {len(self.links)} links")


@dataclass
class TierSpec:
    """Per-tier server sizing."""

    cpu_cap: int
    ram_cap: int
    cpu_weight: int = 1
    ram_weight: int = 1


@dataclass
class LinkSpec:
    bw: int
    latency: int


def _default_tiers():
    return {
        "EDC": TierSpec(cpu_cap=16, ram_cap=32),
        "CDC": TierSpec(cpu_cap=32, ram_cap=64),
        "CCP": TierSpec(cpu_cap=64, ram_cap=128),
    }


def _default_inter_links():
    # keys are sorted tier pairs; latency grows with tier distance
    return {
        "EDC-EDC": LinkSpec(bw=10_000, latency=400),
        "CDC-EDC": LinkSpec(bw=10_000, latency=500),
        "CDC-CDC": LinkSpec(bw=40_000, latency=1_000),
        "CCP-EDC": LinkSpec(bw=10_000, latency=2_500),
        "CCP-CDC": LinkSpec(bw=40_000, latency=2_000),
        "CCP-CCP": LinkSpec(bw=100_000, latency=1_000),
    }


def tier_pair(a: DcType, b: DcType) -> str:
    x, y = sorted((DcType(a).value, DcType(b).value))
    return f"{x}-{y}"


@dataclass
class PsnConfig:
    n_edc: int = 15
    n_cdc: int = 5
    n_ccp: int = 1
    servers_per_edc: int = 16
    servers_per_cdc: int = 64
    servers_per_ccp: int = 448
    tiers: dict[str, TierSpec] = field(default_factory=_default_tiers)
    intra_link: LinkSpec = field(default_factory=lambda: LinkSpec(bw=1_000, latency=10))
    inter_links: dict[str, LinkSpec] = field(default_factory=_default_inter_links)
    seed: int = 0

    def validate(self):
        counts = (self.n_edc, self.n_cdc, self.n_ccp,
                  self.servers_per_edc, self.servers_per_cdc, self.servers_per_ccp)
        if any(c < 0 for c in counts):
            raise ValueError("DC and server counts must be non-negative")
        if self.n_edc + self.n_cdc + self.n_ccp == 0:
            raise ValueError("configuration has zero data centers")
        total = (self.n_edc * self.servers_per_edc + self.n_cdc * self.servers_per_cdc
                 + self.n_ccp * self.servers_per_ccp)
        if total == 0:
            raise ValueError("configuration has zero servers")
        for t in DcType:
            if t.value not in self.tiers:
                raise ValueError(f"missing server sizing for tier {t.value}")

    def scaled(self, factor: float) -> "PsnConfig":
        """Copy with every server CPU/RAM capacity multiplied by ``factor``."""
        tiers = {k: TierSpec(max(0, round(v.cpu_cap * factor)), max(0, round(v.ram_cap * factor)),
                             v.cpu_weight, v.ram_weight) for k, v in self.tiers.items()}
        return PsnConfig(self.n_edc, self.n_cdc, self.n_ccp, self.servers_per_edc,
                         self.servers_per_cdc, self.servers_per_ccp, tiers, self.intra_link,
                         dict(self.inter_links), self.seed)


def build_psn(config: PsnConfig) -> Psn:
    """Build the hierarchical substrate.

    Each DC is a switch with its servers attached in a star. EDC switches
    hang off CDC switches round-robin (off the CCP tier when there is no
    CDC), CDC switches form a ring and each links to a CCP switch
    (round-robin when several). Multiple CCPs form a ring. EDC switches are
    the user access points. Node ids are allocated DC by DC, switch first.
    """
    config.validate()
    psn = Psn()
    plan = ([(DcType.EDC, config.servers_per_edc)] * config.n_edc
            + [(DcType.CDC, config.servers_per_cdc)] * config.n_cdc
            + [(DcType.CCP, config.servers_per_ccp)] * config.n_ccp)
    dc_switch: dict[DcType, list[int]] = {t: [] for t in DcType}
    next_id = 0
    for dc_id, (tier, n_servers) in enumerate(plan):
        psn.add_dc(dc_id, tier)
        sw = next_id
        next_id += 1
        psn.add_switch(sw, dc_id, is_access=(tier is DcType.EDC))
        dc_switch[tier].append(sw)
        spec = config.tiers[tier.value]
        for _ in range(n_servers):
            psn.add_server(next_id, dc_id, spec.cpu_cap, spec.ram_cap, spec.cpu_weight, spec.ram_weight)
            psn.add_link(sw, next_id, config.intra_link.bw, config.intra_link.latency)
            next_id += 1

    def wire(u, v, tu, tv):
        if u == v or psn.link(u, v) is not None:
            return
        spec = config.inter_links[tier_pair(tu, tv)]
        psn.add_link(u, v, spec.bw, spec.latency)

    def ring(ids, tier):
        if len(ids) < 2:
            return
        for i, u in enumerate(ids):
            wire(u, ids[(i + 1) % len(ids)], tier, tier)

    edcs, cdcs, ccps = dc_switch[DcType.EDC], dc_switch[DcType.CDC], dc_switch[DcType.CCP]
    if cdcs:
        parents, parent_tier = cdcs, DcType.CDC
    elif ccps:
        parents, parent_tier = ccps, DcType.CCP
    else:
        parents, parent_tier = [], None
    for i, sw in enumerate(edcs):
        if parents:
            wire(sw, parents[i % len(parents)], DcType.EDC, parent_tier)
    if not parents:
        ring(edcs, DcType.EDC)
    ring(cdcs, DcType.CDC)
    for i, sw in enumerate(cdcs):
        if ccps:
            wire(sw, ccps[i % len(ccps)], DcType.CDC, DcType.CCP)
    ring(ccps, DcType.CCP)
    return psn


def demo_psn_config(**overrides) -> PsnConfig:
    """15 EDC / 5 CDC / 1 CCP with 1008 servers in total."""
    return PsnConfig(**overrides)


def desk_psn_config(**overrides) -> PsnConfig:
    """Small substrate on which the exact solver stays tractable."""
    base = dict(
        n_edc=2, n_cdc=1, n_ccp=1,
        servers_per_edc=2, servers_per_cdc=1, servers_per_ccp=1,
        tiers={
            "EDC": TierSpec(cpu_cap=8, ram_cap=16),
            "CDC": TierSpec(cpu_cap=16, ram_cap=32),
            "CCP": TierSpec(cpu_cap=32, ram_cap=64),
        },
        intra_link=LinkSpec(bw=100, latency=10),
        inter_links={
            "EDC-EDC": LinkSpec(bw=60, latency=400),
            "CDC-EDC": LinkSpec(bw=60, latency=500),
            "CDC-CDC": LinkSpec(bw=120, latency=1_000),
            "CCP-EDC": LinkSpec(bw=60, latency=2_500),
            "CCP-CDC": LinkSpec(bw=120, latency=2_000),
            "CCP-CCP": LinkSpec(bw=200, latency=1_000),
        },
    )
    base.update(overrides)
    return PsnConfig(**base)


# -- ledger operations --------------------------------------------------------

def commit(psn: Psn, nspr: "Nspr", placement: "Placement") -> Psn:
    """Reserve the placement's resources. Rejects invalid or duplicate
    placements without touching the ledger."""
    from .placement import validate_placement

    if placement.nspr_id in psn.committed:
        raise LedgerError(f"slice {placement.nspr_id} is already committed")
    violations = validate_placement(psn, nspr, placement)
    if violations:
        raise LedgerError(f"invalid placement for slice {placement.nspr_id}: {violations[0]}",
                          violations[0])
    for idx, host in placement.vnf_host.items():
        vnf = nspr.vnfs[idx]
        psn.adjust_node(host, vnf.cpu_req, vnf.ram_req)
    for idx, path in placement.vlink_path.items():
        psn.adjust_path(path, nspr.vlinks[idx].bw_req)
    psn.committed[placement.nspr_id] = (nspr, placement)
    return psn


def release(psn: Psn, placement: "Placement") -> Psn:
    """Exact inverse of ``commit``."""
    entry = psn.committed.pop(placement.nspr_id, None)
    if entry is None:
        raise LedgerError(f"slice {placement.nspr_id} is not committed")
    nspr, committed = entry
    for idx, host in committed.vnf_host.items():
        vnf = nspr.vnfs[idx]
        psn.adjust_node(host, -vnf.cpu_req, -vnf.ram_req)
    for idx, path in committed.vlink_path.items():
        psn.adjust_path(path, -nspr.vlinks[idx].bw_req)
    return psn


def psn_to_dot(psn: Psn) -> str:
    lines = ["graph psn {"]
    for sid in sorted(psn.switches):
        sw = psn.switches[sid]
        label = f"sw{sid}" + (" access" if sw.is_access else "")
        lines.append(f'  n{sid} [shape=ellipse, label="{label}"];')
    for sid in sorted(psn.servers):
        s = psn.servers[sid]
        lines.append(f'  n{sid} [shape=box, label="{sid} {s.cpu_cap}/{s.ram_cap}"];')
    for key in sorted(psn.links):
        l = psn.links[key]
        lines.append(f'  n{l.a} -- n{l.b} [label="{l.bw_cap},{l.latency}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
