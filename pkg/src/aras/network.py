"""Topology state and static shortest-path routing."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .errors import Unreachable
from .scenario import LinkSpec, NodeSpec, Scenario


def link_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass
class Link:
    a: str
    b: str
    latency_us: int
    loss_prob: float
    cost: int
    link_class: str

    @classmethod
    def from_spec(cls, spec: LinkSpec) -> "Link":
        a, b = link_key(spec.a, spec.b)
        return cls(a, b, spec.latency_us, spec.loss_prob, spec.cost, spec.link_class)

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


@dataclass
class NetworkState:
    nodes: dict[str, NodeSpec]
    links: dict[tuple[str, str], Link]
    adj: dict[str, list[str]]
    routes: dict[str, dict[str, tuple[str, ...]]] = field(default_factory=dict)
    energy_mj: dict[str, float] = field(default_factory=dict)
    link_packets: dict[tuple[str, str], int] = field(default_factory=dict)

    def link(self, a: str, b: str) -> Link:
        return self.links[link_key(a, b)]

    def next_hop(self, at: str, dst: str) -> str | None:
        path = self.routes.get(at, {}).get(dst)
        if path is None or len(path) < 2:
            return None
        return path[1]

    def path_cost(self, path) -> int:
        return sum(self.link(u, v).cost for u, v in zip(path, path[1:]))

    def recompute_routes(self) -> None:
        self.routes = {src: shortest_paths_from(self, src) for src in self.nodes}


def shortest_paths_from(net: NetworkState, src: str) -> dict[str, tuple[str, ...]]:
    """Dijkstra over (cost, path) labels.

    Comparing whole paths on equal cost yields the lexicographically smallest
    node-id sequence among minimum-cost paths. With strictly positive link
    costs that choice is prefix-closed, so it is also consistent with
    hop-by-hop forwarding from any intermediate node.
    """
    done: dict[str, tuple[str, ...]] = {}
    heap: list[tuple[int, tuple[str, ...]]] = [(0, (src,))]
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done[node] = path
        for nb in net.adj[node]:
            if nb not in done:
                heapq.heappush(heap, (cost + net.link(node, nb).cost, path + (nb,)))
    return done


def build_network(s: Scenario) -> NetworkState:
    nodes = {n.id: n for n in s.nodes}
    links = {}
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for spec in s.links:
        link = Link.from_spec(spec)
        links[link.key] = link
        adj[spec.a].append(spec.b)
        adj[spec.b].append(spec.a)
    for nbrs in adj.values():
        nbrs.sort()
    net = NetworkState(
        nodes=nodes,
        links=links,
        adj=adj,
        energy_mj={n: 0.0 for n in nodes},
        link_packets={k: 0 for k in links},
    )
    net.recompute_routes()
    return net


def route(net: NetworkState, src: str, dst: str) -> list[str]:
    for n in (src, dst):
        if n not in net.nodes:
            raise KeyError(f"unknown node {n!r}")
    path = net.routes[src].get(dst)
    if path is None:
        raise Unreachable(f"no path from {src} to {dst}")
    return list(path)


def reachable_from(net: NetworkState, src: str) -> set[str]:
    seen = {src}
    stack = [src]
    while stack:
        for nb in net.adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen


def path_link_classes(net: NetworkState, path) -> list[str]:
    return sorted({net.link(u, v).link_class for u, v in zip(path, path[1:])})
