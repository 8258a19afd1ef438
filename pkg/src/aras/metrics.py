"""Delivery metrics, network health analysis and threshold anomaly detection."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx

from .errors import BadWindow, ZeroTransmitted
from .network import NetworkState, reachable_from
from .scenario import FlowSpec


def pdr(Pd: int, Pt: int) -> float:
    """Packet delivery ratio, delivered over transmitted."""
    if Pt <= 0:
        raise ZeroTransmitted("PDR undefined with no transmitted packets")
    if not 0 <= Pd <= Pt:
        raise ValueError(f"delivered count {Pd} outside [0, {Pt}]")
    return Pd / Pt


def dr(Pl: int, Pt: int) -> float:
    """Dropping ratio, lost over transmitted."""
    if Pt <= 0:
        raise ZeroTransmitted("DR undefined with no transmitted packets")
    if not 0 <= Pl <= Pt:
        raise ValueError(f"lost count {Pl} outside [0, {Pt}]")
    return Pl / Pt


@dataclass
class HealthReport:
    articulation_points: list[str]
    link_packets: list[dict]
    max_utilization_links: list[dict]
    unreachable_pairs: list[dict]
    components: int = 1


def _graph(net: NetworkState) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(net.nodes)
    g.add_edges_from(net.links)
    return g


def articulation_points(net: NetworkState) -> list[str]:
    return sorted(nx.articulation_points(_graph(net)))


def network_health(net: NetworkState, flows: Iterable[FlowSpec] = ()) -> HealthReport:
    links = [
        {"a": l.a, "b": l.b, "class": l.link_class, "packets": net.link_packets.get(k, 0)}
        for k, l in sorted(net.links.items())
    ]
    peak = max((l["packets"] for l in links), default=0)
    busiest = [l for l in links if peak > 0 and l["packets"] == peak]
    unreachable = []
    reach_cache: dict[str, set[str]] = {}
    for i, f in enumerate(flows):
        if f.src not in reach_cache:
            reach_cache[f.src] = reachable_from(net, f.src)
        if f.dst not in reach_cache[f.src]:
            unreachable.append({"flow": i, "src": f.src, "dst": f.dst})
    return HealthReport(
        articulation_points=articulation_points(net),
        link_packets=links,
        max_utilization_links=busiest,
        unreachable_pairs=unreachable,
        components=nx.number_connected_components(_graph(net)),
    )


@dataclass(frozen=True)
class AnomalyFlag:
    series: str
    index: int
    t: int
    value: float
    mean: float
    std: float
    k: float
    absolute: float | None
    reason: str  # "deviation" | "absolute"

    def violates(self) -> bool:
        if self.reason == "absolute":
            return self.absolute is not None and self.value > self.absolute
        return abs(self.value - self.mean) > self.k * self.std


def detect_anomalies(samples: Sequence[float], window: int = 20, k: float = 3.0,
                     absolute: float | None = None, times: Sequence[int] | None = None,
                     series: str = "") -> list[AnomalyFlag]:
    """Flag samples that leave the rolling band of the preceding ``window`` samples.

    A sample is flagged when it deviates from the previous window's mean by
    more than ``k`` population standard deviations, or exceeds ``absolute``.
    The first ``window`` samples have no history and are never flagged.
    """
    if window < 2:
        raise BadWindow(f"window must be >= 2, got {window}")
    flags = []
    for i in range(window, len(samples)):
        prev = samples[i - window:i]
        mean = statistics.fmean(prev)
        std = statistics.pstdev(prev)
        x = samples[i]
        reason = None
        if abs(x - mean) > k * std:
            reason = "deviation"
        elif absolute is not None and x > absolute:
            reason = "absolute"
        if reason:
            t = times[i] if times is not None else i
            flags.append(AnomalyFlag(series, i, t, float(x), mean, std, k, absolute, reason))
    return flags


@dataclass
class SeriesSet:
    """Samples grouped by ``node/series`` for anomaly scanning."""
    values: dict[str, list[float]] = field(default_factory=dict)
    times: dict[str, list[int]] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[int, str, str, float]]) -> "SeriesSet":
        out = cls()
        for t, node, name, value in rows:
            key = f"{node}/{name}"
            out.values.setdefault(key, []).append(value)
            out.times.setdefault(key, []).append(t)
        return out

    def scan(self, window: int, k: float, absolute: float | None) -> list[AnomalyFlag]:
        flags = []
        for key in sorted(self.values):
            flags.extend(detect_anomalies(self.values[key], window, k, absolute,
                                          self.times[key], key))
        return flags
