"""Attack behaviours: ip-dropping (blackhole) and sinkhole route attraction."""

from __future__ import annotations

from typing import TYPE_CHECKING, Iterable

from .errors import UnknownTarget
from .kernel import RngStream
from .network import NetworkState
from .scenario import AttackConfig, FlowSpec

if TYPE_CHECKING:
    from .simulation import Simulation


def blackhole_decide(cfg: AttackConfig, now: int, rng: RngStream) -> bool:
    """True when the compromised node drops the packet it was asked to forward.

    Outside the attack window no random draw is consumed, so the node's
    behaviour there is trace-identical to an uncompromised run.
    """
    if not cfg.active(now):
        return False
    return rng.random() < cfg.drop_prob


def sinkhole_activate(net: NetworkState, cfg: AttackConfig) -> dict[tuple[str, str], int]:
    """Advertise ``cfg.advertised_cost`` on every link incident to the target.

    Returns the original costs so the caller can restore them later.
    """
    original = {}
    for nb in net.adj[cfg.target]:
        link = net.link(cfg.target, nb)
        original[link.key] = link.cost
        link.cost = cfg.advertised_cost
    net.recompute_routes()
    return original


def sinkhole_deactivate(net: NetworkState, original: dict[tuple[str, str], int]) -> None:
    for key, cost in original.items():
        net.links[key].cost = cost
    net.recompute_routes()


def apply_attacks(sim: "Simulation", attacks: Iterable[AttackConfig]) -> None:
    attacks = list(attacks)
    for cfg in attacks:
        if cfg.target not in sim.net.nodes:
            raise UnknownTarget(f"attack target {cfg.target!r} is not in the network")
    for cfg in attacks:
        if cfg.kind == "ip-dropping":
            sim.behaviors[cfg.target].append(cfg)
        elif cfg.kind == "sinkhole":
            _schedule_sinkhole(sim, cfg)
        else:
            raise ValueError(f"unsupported attack kind {cfg.kind!r}")


def _schedule_sinkhole(sim: "Simulation", cfg: AttackConfig) -> None:
    saved: dict[str, dict] = {}

    def on():
        saved["costs"] = sinkhole_activate(sim.net, cfg)
        return {"attack": "sinkhole", "advertised_cost": cfg.advertised_cost}

    def off():
        sinkhole_deactivate(sim.net, saved.pop("costs"))
        return {"attack": "sinkhole"}

    sim.schedule_timer(cfg.target, max(cfg.start_us, sim.now), "sinkhole-on", on)
    if cfg.end_us is not None:
        sim.schedule_timer(cfg.target, cfg.end_us, "sinkhole-off", off)


def flows_through(net: NetworkState, flows: Iterable[FlowSpec], node: str) -> list[bool]:
    """For each flow, whether its current route passes through ``node``."""
    out = []
    for f in flows:
        path = net.routes.get(f.src, {}).get(f.dst)
        out.append(path is not None and node in path)
    return out
