import json
import random

import pytest

from aras.scenario import scenario_from_dict


def node(i, node_id=None, cls="it-host", **kw):
    d = {
        "id": node_id or f"n{i}",
        "addr": kw.pop("addr", f"10.0.{i // 250}.{i % 250 + 1}"),
        "mac": f"02:00:00:00:{i // 256:02x}:{i % 256:02x}",
        "class": cls,
    }
    d.update(kw)
    return d


def link(a, b, cost=1, loss=0.0, latency=100, cls="ethernet"):
    return {"a": a, "b": b, "cost": cost, "loss_prob": loss, "latency_us": latency,
            "class": cls}


def flow(src, dst, packets=10, interval=1000, start=0):
    return {"src": src, "dst": dst, "packets": packets, "interval_us": interval,
            "start_us": start}


def doc(nodes, links=(), flows=(), attacks=(), assessment=None, seed=7, name="t"):
    return {"name": name, "master_seed": seed, "nodes": list(nodes), "links": list(links),
            "flows": list(flows), "attacks": list(attacks), "assessment": assessment or {}}


def line_doc(ids=("A", "B", "C"), loss=0.0, **kw):
    nodes = [node(i, n) for i, n in enumerate(ids)]
    links = [link(a, b, loss=loss) for a, b in zip(ids, ids[1:])]
    return doc(nodes, links, **kw)


def build(d):
    return scenario_from_dict(json.loads(json.dumps(d)))


def random_graph_doc(rng: random.Random, n: int, p: float = 0.3, max_cost: int = 5,
                     connected: bool = False):
    ids = [f"v{i:02d}" for i in range(n)]
    edges = set()
    if connected:
        for i in range(1, n):
            edges.add((ids[rng.randrange(i)], ids[i]))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((ids[i], ids[j]))
    nodes = [node(i, v) for i, v in enumerate(ids)]
    links = [link(a, b, cost=rng.randint(1, max_cost)) for a, b in sorted(edges)]
    return doc(nodes, links)


@pytest.fixture
def line3():
    return build(line_doc())
