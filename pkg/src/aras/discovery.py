"""Agentless asset discovery by simulated ping sweep, plus asset profiling.

Probes travel hop by hop through the simulated network and cost the
forwarding nodes energy, but they never touch flow counters or any random
stream used by application traffic.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import MissingClassDefault, ValidationError
from .kernel import Event, EventKind
from .network import NetworkState
from .scenario import LEVELS, AssessmentConfig, FlowSpec, NodeSpec
from .simulation import Simulation

PROBE_SPACING_US = 10
PROCESSING_CLASSES = ("gateway", "scada-server")


@dataclass(frozen=True)
class AssetRecord:
    addr: str
    mac: str
    node_id: str
    os: str
    medium: str
    node_class: str
    software: tuple[tuple[str, str], ...] = ()
    data_sensitivity: str = "low"

    @classmethod
    def observe(cls, node: NodeSpec) -> "AssetRecord":
        return cls(node.addr, node.mac, node.id, node.os, node.medium, node.node_class,
                   node.software, node.data_sensitivity)


@dataclass(frozen=True)
class AssetProfile:
    asset: AssetRecord
    owner: str
    value: str
    security_requirements: tuple[str, ...]
    most_important: str
    priority: int

    @property
    def node_id(self) -> str:
        return self.asset.node_id


@dataclass(frozen=True)
class Container:
    asset: str
    location: str
    mode: str  # stored | transported | processed


def addr_key(addr: str) -> int:
    return int(ipaddress.IPv4Address(addr))


def in_ranges(addr: str, ranges: Sequence[str]) -> bool:
    ip = ipaddress.IPv4Address(addr)
    return any(ip in ipaddress.IPv4Network(r, strict=False) for r in ranges)


@dataclass
class Sweep:
    origin: str
    ranges: list[str]
    found: dict[str, AssetRecord] = field(default_factory=dict)
    probes_sent: int = 0
    silent: list[str] = field(default_factory=list)

    @property
    def records(self) -> list[AssetRecord]:
        return sorted(self.found.values(), key=lambda r: addr_key(r.addr))

    @property
    def addresses_probed(self) -> int:
        return sum(ipaddress.IPv4Network(r, strict=False).num_addresses for r in self.ranges)


def schedule_sweep(sim: Simulation, origin: str, ranges: Sequence[str],
                   start_us: int = 0) -> Sweep:
    """Queue echo requests from ``origin`` to every scenario address in ``ranges``.

    Addresses with no simulated host behind them cannot answer, so only
    node addresses are materialised as probe events.
    """
    if origin not in sim.net.nodes:
        raise ValueError(f"unknown probe origin {origin!r}")
    sweep = Sweep(origin, list(ranges))
    targets = sorted((n for n in sim.net.nodes.values() if in_ranges(n.addr, ranges)),
                     key=lambda n: addr_key(n.addr))
    start = max(start_us, sim.now)
    for i, node in enumerate(targets):
        path = sim.net.routes[origin].get(node.id)
        if path is None:
            sweep.silent.append(node.addr)
            continue
        sweep.probes_sent += 1
        sim.kernel.schedule(EventKind.PROBE, origin, start + i * PROBE_SPACING_US,
                            {"probe": i, "dir": "req", "path": path, "hop": 0})

    def handle(event: Event) -> None:
        _on_probe(sim, sweep, event)

    sim.probe_handler = handle
    return sweep


def _on_probe(sim: Simulation, sweep: Sweep, event: Event) -> None:
    p = event.payload
    path, hop = p["path"], p["hop"]
    at = path[hop]
    sim.charge_energy(at)
    data = {"probe": p["probe"], "dir": p["dir"]}
    if hop < len(path) - 1:
        nxt = path[hop + 1]
        latency = sim.net.link(at, nxt).latency_us
        sim.kernel.schedule(EventKind.PROBE, nxt, sim.now + latency, {**p, "hop": hop + 1})
        data["next"] = nxt
    elif p["dir"] == "req":
        node = sim.net.nodes[at]
        if node.responds_to_ping:
            back = sim.net.routes[at][sweep.origin]
            sim.kernel.schedule(EventKind.PROBE, at, sim.now,
                                {"probe": p["probe"], "dir": "rep", "path": back, "hop": 0,
                                 "responder": at})
            data["outcome"] = "reply"
        else:
            sweep.silent.append(node.addr)
            data["outcome"] = "silent"
    else:
        node = sim.net.nodes[p["responder"]]
        sweep.found[node.addr] = AssetRecord.observe(node)
        data["outcome"] = "discovered"
        data["addr"] = node.addr
    sim.record(at, event.kind.value, data)


def ping_sweep(sim: Simulation, probe_origin: str, ranges: Sequence[str] | str,
               start_us: int = 0) -> list[AssetRecord]:
    """Run a complete sweep on ``sim`` and return discovered assets sorted by address."""
    if isinstance(ranges, str):
        ranges = [ranges]
    sweep = schedule_sweep(sim, probe_origin, ranges, start_us)
    sim.run()
    return sweep.records


_RANK = {level: i for i, level in enumerate(LEVELS)}


def profile_assets(records: Iterable[AssetRecord], cfg: AssessmentConfig) -> list[AssetProfile]:
    records = list(records)
    merged = []
    for rec in records:
        if rec.node_class not in cfg.class_defaults:
            raise MissingClassDefault(f"no profile defaults for class {rec.node_class!r}")
        prof = {**cfg.class_defaults[rec.node_class], **cfg.overrides.get(rec.node_id, {})}
        if prof["most_important"] not in prof["requirements"]:
            raise ValidationError(f"assessment.overrides.{rec.node_id}.most_important",
                                  "must be one of the requirements")
        merged.append((rec, prof))
    merged.sort(key=lambda rp: (-_RANK[rp[1]["value"]], -_RANK[rp[0].data_sensitivity],
                                rp[0].node_id))
    return [
        AssetProfile(rec, prof["owner"], prof["value"], tuple(prof["requirements"]),
                     prof["most_important"], rank)
        for rank, (rec, prof) in enumerate(merged, start=1)
    ]


_MODE_ORDER = {"stored": 0, "transported": 1, "processed": 2}


def map_containers(profiles: Iterable[AssetProfile], net: NetworkState,
                   flows: Iterable[FlowSpec]) -> list[Container]:
    flows = list(flows)
    out: set[Container] = set()
    for prof in profiles:
        node = prof.node_id
        out.add(Container(node, node, "stored"))
        for f in flows:
            path = net.routes.get(f.src, {}).get(f.dst)
            if path is None or node not in path:
                continue
            out.update(Container(node, hop, "transported") for hop in path)
            for end in (f.src, f.dst):
                if net.nodes[end].node_class in PROCESSING_CLASSES:
                    out.add(Container(node, end, "processed"))
    return sorted(out, key=lambda c: (c.asset, _MODE_ORDER[c.mode], c.location))
