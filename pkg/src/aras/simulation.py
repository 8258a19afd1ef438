"""Packet-level simulation over a NetworkState: traffic, forwarding, energy and logs."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

from .attacks import blackhole_decide
from .errors import Unreachable
from .kernel import Event, EventKind, Kernel, KernelStats
from .network import NetworkState, build_network
from .scenario import AttackConfig, Scenario

MAX_HOPS = 64
SERIES = ("sent", "received", "dropped", "energy_mj")


@dataclass
class FlowStats:
    Pt: int = 0
    Pd: int = 0
    Pl: int = 0
    in_flight: int = 0
    drops: dict[str, int] = field(default_factory=dict)  # reason -> count
    drops_by_node: dict[str, int] = field(default_factory=dict)  # attack drops per node

    def conserved(self) -> bool:
        return self.Pt == self.Pd + self.Pl + self.in_flight


@dataclass
class Packet:
    id: int
    flow: int
    src: str
    dst: str
    sent_at: int
    hops: int = 0


@dataclass(frozen=True)
class Deliver:
    pass


@dataclass(frozen=True)
class NextHop:
    node: str


@dataclass(frozen=True)
class Drop:
    reason: str


class Simulation:
    """One run: owns the kernel, the network state and every counter.

    Nothing here is shared between runs, so independent runs may execute in
    separate processes.
    """

    def __init__(self, scenario: Scenario, net: NetworkState | None = None):
        self.scenario = scenario
        self.net = net if net is not None else build_network(scenario)
        self.kernel = Kernel(scenario.master_seed)
        self.cfg = scenario.assessment
        self.flow_stats = [FlowStats() for _ in scenario.flows]
        self.behaviors: dict[str, list[AttackConfig]] = defaultdict(list)
        self.attack_drops: dict[str, int] = defaultdict(int)
        self.log: list[dict[str, Any]] = []
        self._buckets: dict[tuple[str, str], dict[int, float]] = defaultdict(
            lambda: defaultdict(float))
        self._last_t = 0
        self._packet_ids = 0
        self.timers: dict[int, Any] = {}
        self._timer_ids = 0
        self.probe_handler = None
        self.kernel.on(EventKind.TRAFFIC_EMIT, self._on_emit)
        self.kernel.on(EventKind.PACKET_ARRIVAL, self._on_arrival)
        self.kernel.on(EventKind.TIMER, self._on_timer)
        self.kernel.on(EventKind.PROBE, self._on_probe)

    # -- bookkeeping ---------------------------------------------------------

    @property
    def now(self) -> int:
        return self.kernel.clock

    def record(self, node: str, kind: str, data: dict[str, Any]) -> None:
        self.log.append({"t": self.now, "node": node, "kind": kind, "data": data})

    def sample(self, node: str, series: str, value: float = 1.0) -> None:
        bucket = self.now // self.cfg.sample_interval_us
        self._buckets[(node, series)][bucket] += value
        self._last_t = max(self._last_t, self.now)

    def charge_energy(self, node: str) -> None:
        mj = self.cfg.energy_for(self.net.nodes[node].node_class)
        self.net.energy_mj[node] += mj
        # charge count, scaled in metric_samples, keeps equal buckets bit-identical
        self.sample(node, "energy_mj")

    def metric_samples(self) -> list[tuple[int, str, str, float]]:
        """Per-node, per-interval samples of every series, zero-filled.

        Rows are ``(t, node, series, value)`` ordered by time, node, series.
        """
        interval = self.cfg.sample_interval_us
        n_buckets = self._last_t // interval + 1 if self._buckets else 0
        rows = []
        for b in range(n_buckets):
            for node, spec in self.net.nodes.items():
                for series in SERIES:
                    value = self._buckets.get((node, series), {}).get(b, 0.0)
                    if series == "energy_mj":
                        value *= self.cfg.energy_for(spec.node_class)
                    rows.append((b * interval, node, series, value))
        return rows

    def series(self, node: str, series: str) -> list[float]:
        return [v for _, n, s, v in self.metric_samples() if n == node and s == series]

    # -- traffic ---------------------------------------------------------------

    def emit_traffic(self, flow_index: int) -> list[int]:
        flow = self.scenario.flows[flow_index]
        return [
            self.kernel.schedule(EventKind.TRAFFIC_EMIT, flow.src,
                                 flow.start_us + k * flow.interval_us, (flow_index, k))
            for k in range(flow.packets)
        ]

    def _on_emit(self, event: Event) -> None:
        flow_index, seq = event.payload
        flow = self.scenario.flows[flow_index]
        if flow.dst not in self.net.routes[flow.src]:
            raise Unreachable(f"flows[{flow_index}]: no path from {flow.src} to {flow.dst}")
        stats = self.flow_stats[flow_index]
        stats.Pt += 1
        stats.in_flight += 1
        packet = Packet(self._packet_ids, flow_index, flow.src, flow.dst, self.now)
        self._packet_ids += 1
        self._step(packet, flow.src, event.kind.value, {"seq": seq})

    def _on_arrival(self, event: Event) -> None:
        self.sample(event.target, "received")
        self._step(event.payload, event.target, event.kind.value, {})

    def _step(self, packet: Packet, at: str, kind: str, extra: dict[str, Any]) -> None:
        outcome = self.forward(packet, at)
        data = {"packet": packet.id, "flow": packet.flow, **extra}
        if isinstance(outcome, Deliver):
            data["outcome"] = "deliver"
        elif isinstance(outcome, NextHop):
            data["outcome"] = "forward"
            data["next"] = outcome.node
        else:
            data["outcome"] = "drop"
            data["reason"] = outcome.reason
        self.record(at, kind, data)

    def forward(self, packet: Packet, at: str) -> Deliver | NextHop | Drop:
        """Decide the fate of ``packet`` at node ``at`` and apply it."""
        stats = self.flow_stats[packet.flow]
        self.charge_energy(at)
        if at == packet.dst:
            stats.Pd += 1
            stats.in_flight -= 1
            return Deliver()
        # ip-dropping applies to received traffic only, never at the origin
        if at != packet.src:
            for cfg in self.behaviors.get(at, ()):
                if blackhole_decide(cfg, self.now, self.kernel.rng(f"attack/{cfg.target}")):
                    self.attack_drops[at] += 1
                    stats.drops_by_node[at] = stats.drops_by_node.get(at, 0) + 1
                    return self._drop(stats, at, "attack")
        nxt = self.net.next_hop(at, packet.dst)
        if nxt is None:
            return self._drop(stats, at, "no-route")
        if packet.hops >= MAX_HOPS:
            return self._drop(stats, at, "ttl")
        link = self.net.link(at, nxt)
        self.net.link_packets[link.key] += 1
        self.sample(at, "sent")
        draw = self.kernel.rng(f"link/{link.a}|{link.b}").random()
        if draw < link.loss_prob:
            return self._drop(stats, at, "link-loss")
        packet.hops += 1
        self.kernel.schedule(EventKind.PACKET_ARRIVAL, nxt, self.now + link.latency_us, packet)
        return NextHop(nxt)

    def _drop(self, stats: FlowStats, at: str, reason: str) -> Drop:
        stats.Pl += 1
        stats.in_flight -= 1
        stats.drops[reason] = stats.drops.get(reason, 0) + 1
        self.sample(at, "dropped")
        return Drop(reason)

    # -- timers and probes -------------------------------------------------------

    def schedule_timer(self, node: str, time: int, action: str, callback) -> int:
        key = self._timer_ids
        self._timer_ids += 1
        self.timers[key] = callback
        return self.kernel.schedule(EventKind.TIMER, node, time, {"action": action, "key": key})

    def _on_timer(self, event: Event) -> None:
        callback = self.timers.pop(event.payload["key"])
        data = callback() or {}
        self.record(event.target, event.kind.value, {"action": event.payload["action"], **data})

    def _on_probe(self, event: Event) -> None:
        if self.probe_handler is None:
            raise RuntimeError("probe event without a registered sweep")
        self.probe_handler(event)

    # -- driving ---------------------------------------------------------------

    def start_traffic(self) -> None:
        for i in range(len(self.scenario.flows)):
            self.emit_traffic(i)

    def run(self, until: int | None = None) -> KernelStats:
        return self.kernel.run(until)


def emit_traffic(sim: Simulation, flow_index: int) -> list[int]:
    return sim.emit_traffic(flow_index)
