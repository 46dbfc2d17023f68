"""Acceptance-ratio and utilization samples, and their CSV/JSONL exports.

Ratios are kept as exact fractions. The CSV renders them as 20-significant
digit decimals, which is enough to recover the fraction exactly for any
denominator up to 10**9; larger denominators are written as ``num/den``.
"""

from __future__ import annotations

import csv
import decimal
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .resource import TIER_ORDER, DcType, Psn

RESOURCES = ("cpu", "ram", "bw")
GROUPS = ("edc", "cdc", "ccp", "all")
_TIER_GROUP = {DcType.EDC: "edc", DcType.CDC: "cdc", DcType.CCP: "ccp"}

UTIL_COLUMNS = [f"util_{r}_{g}" for r in RESOURCES for g in GROUPS]
CSV_HEADER = ["t", "arrivals", "accepts", "rejects", "acceptance_ratio", *UTIL_COLUMNS, "decision_us"]

MAX_DECIMAL_DEN = 10**9
_DIGITS = 20


def acceptance_ratio(accepts: int, arrivals: int) -> Optional[Fraction]:
    if accepts < 0 or arrivals < 0 or accepts > arrivals:
        raise ValueError(f"corrupt counters: {accepts} accepts out of {arrivals} arrivals")
    if arrivals == 0:
        return None
    return Fraction(accepts, arrivals)


def link_group(psn: Psn, a: int, b: int) -> Optional[str]:
    """A link counts toward the more edge-ward tier of its two endpoints."""
    tiers = [t for t in (psn.tier_of(a), psn.tier_of(b)) if t is not None]
    if not tiers:
        return None
    return _TIER_GROUP[min(tiers, key=TIER_ORDER.index)]


class UtilizationIndex:
    """Precomputed group membership so repeated sampling of one substrate
    only has to sum."""

    def __init__(self, psn: Psn):
        self.server_groups = {g: [] for g in GROUPS}
        for s in psn.servers.values():
            t = psn.tier_of(s.id)
            if t is not None:
                self.server_groups[_TIER_GROUP[t]].append(s.id)
            self.server_groups["all"].append(s.id)
        self.link_groups = {g: [] for g in GROUPS}
        for key in psn.links:
            g = link_group(psn, *key)
            if g is not None:
                self.link_groups[g].append(key)
            self.link_groups["all"].append(key)

    def __call__(self, psn: Psn) -> dict[str, Fraction]:
        out = {}
        for g in GROUPS:
            servers = [psn.servers[i] for i in self.server_groups[g]]
            links = [psn.links[k] for k in self.link_groups[g]]
            out[f"util_cpu_{g}"] = _ratio(sum(s.cpu_used for s in servers), sum(s.cpu_cap for s in servers))
            out[f"util_ram_{g}"] = _ratio(sum(s.ram_used for s in servers), sum(s.ram_cap for s in servers))
            out[f"util_bw_{g}"] = _ratio(sum(l.bw_used for l in links), sum(l.bw_cap for l in links))
        return {c: out[c] for c in UTIL_COLUMNS}


def _ratio(used, cap) -> Fraction:
    # an empty group (e.g. no CDC tier) reports zero usage
    return Fraction(used, cap) if cap else Fraction(0)


def utilization(psn: Psn) -> dict[str, Fraction]:
    """Used/capacity per resource (cpu, ram, bw) and group (edc, cdc, ccp, all),
    keyed by CSV column name."""
    return UtilizationIndex(psn)(psn)


@dataclass
class MetricsSample:
    t: int
    arrivals: int
    accepts: int
    rejects: int
    util: dict[str, Fraction]
    decision_us: int = 0

    @property
    def acceptance_ratio(self) -> Optional[Fraction]:
        return acceptance_ratio(self.accepts, self.arrivals)

    def row(self) -> list[str]:
        ratio = self.acceptance_ratio
        return ([str(self.t), str(self.arrivals), str(self.accepts), str(self.rejects),
                 "" if ratio is None else format_fraction(ratio)]
                + [format_fraction(self.util[c]) for c in UTIL_COLUMNS]
                + [str(self.decision_us)])


@dataclass
class MetricsSeries:
    samples: list[MetricsSample] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    def check(self):
        """Monotone counters, ordered times, utilizations in [0, 1]."""
        prev = None
        for s in self.samples:
            if s.arrivals != s.accepts + s.rejects:
                raise ValueError(f"t={s.t}: arrivals != accepts + rejects")
            for c in UTIL_COLUMNS:
                if not 0 <= s.util[c] <= 1:
                    raise ValueError(f"t={s.t}: {c}={s.util[c]} outside [0, 1]")
            if prev is not None:
                if s.t < prev.t:
                    raise ValueError(f"sample times go backwards at t={s.t}")
                if s.arrivals < prev.arrivals or s.accepts < prev.accepts or s.rejects < prev.rejects:
                    raise ValueError(f"counters decrease at t={s.t}")
            prev = s


def format_fraction(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    if x.denominator > MAX_DECIMAL_DEN:
        return f"{x.numerator}/{x.denominator}"
    with decimal.localcontext() as ctx:
        ctx.prec = _DIGITS
        d = decimal.Decimal(x.numerator) / decimal.Decimal(x.denominator)
    return format(d, "f")


def parse_fraction(text: str) -> Fraction:
    if "/" in text:
        return Fraction(text)
    return Fraction(text).limit_denominator(MAX_DECIMAL_DEN)


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_csv(series: MetricsSeries, path):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for s in series.samples:
                w.writerow(s.row())
    except OSError as exc:
        raise OSError(f"cannot write metrics CSV {path}: {exc}") from exc


def read_csv(path) -> MetricsSeries:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header")
        samples = []
        for lineno, row in enumerate(reader, start=2):
            rec = dict(zip(header, row))
            s = MetricsSample(int(rec["t"]), int(rec["arrivals"]), int(rec["accepts"]),
                              int(rec["rejects"]), {c: parse_fraction(rec[c]) for c in UTIL_COLUMNS},
                              int(rec["decision_us"]))
            ratio = s.acceptance_ratio
            if (rec["acceptance_ratio"] == "") != (ratio is None) or (
                    ratio is not None and parse_fraction(rec["acceptance_ratio"]) != ratio):
                raise ValueError(f"{path}:{lineno}: acceptance_ratio disagrees with counters")
            samples.append(s)
    return MetricsSeries(samples)


def series_to_jsonl(series: MetricsSeries) -> str:
    """One JSON object per sample; fractions as [numerator, denominator]."""
    lines = []
    if series.meta:
        lines.append(json.dumps({"meta": series.meta}, sort_keys=True, separators=(",", ":")))
    for s in series.samples:
        ratio = s.acceptance_ratio
        obj = {"t": s.t, "arrivals": s.arrivals, "accepts": s.accepts, "rejects": s.rejects,
               "acceptance_ratio": None if ratio is None else [ratio.numerator, ratio.denominator],
               "decision_us": s.decision_us}
        obj.update({c: [s.util[c].numerator, s.util[c].denominator] for c in UTIL_COLUMNS})
        lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def write_jsonl(series: MetricsSeries, path):
    path = Path(path)
    try:
        path.write_text(series_to_jsonl(series))
    except OSError as exc:
        raise OSError(f"cannot write metrics JSONL {path}: {exc}") from exc


def read_jsonl(path) -> MetricsSeries:
    series = MetricsSeries()
    for line in Path(path).read_text().splitlines():
        obj = json.loads(line)
        if "meta" in obj:
            series.meta = obj["meta"]
            continue
        series.samples.append(MetricsSample(
            obj["t"], obj["arrivals"], obj["accepts"], obj["rejects"],
            {c: Fraction(*obj[c]) for c in UTIL_COLUMNS}, obj["decision_us"]))
    return series


def write_dot(obj, path):
    """DOT export of a substrate (undirected) or slice request (directed)."""
    from .resource import psn_to_dot
    from .slices import Nspr, nspr_to_dot

    if not isinstance(obj, (Psn, Nspr)):
        raise TypeError(f"cannot export {type(obj).__name__} as DOT")
    text = psn_to_dot(obj) if isinstance(obj, Psn) else nspr_to_dot(obj)
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write DOT file {path}: {exc}") from exc
