import random

import pytest
from hypothesis import given, settings, strategies as st

from aras.errors import Unreachable
from aras.network import build_network, route
from aras.simulation import Deliver, Drop, NextHop, Packet, Simulation

from conftest import build, doc, flow, line_doc, link, node, random_graph_doc


# -- independent oracles --------------------------------------------------------

def all_simple_paths(adj, src, dst):
    out = []

    def dfs(path):
        u = path[-1]
        if u == dst:
            out.append(tuple(path))
            return
        for v in adj[u]:
            if v not in path:
                dfs(path + [v])

    dfs([src])
    return out


def edge_costs(d):
    costs = {}
    for l in d["links"]:
        costs[(l["a"], l["b"])] = costs[(l["b"], l["a"])] = l["cost"]
    return costs


def adjacency(d):
    adj = {n["id"]: [] for n in d["nodes"]}
    for l in d["links"]:
        adj[l["a"]].append(l["b"])
        adj[l["b"]].append(l["a"])
    return adj


def array_dijkstra(d, src):
    """Textbook O(n^2) Dijkstra on costs only."""
    ids = [n["id"] for n in d["nodes"]]
    costs = edge_costs(d)
    dist = {v: float("inf") for v in ids}
    dist[src] = 0
    done = set()
    while len(done) < len(ids):
        u = min((v for v in ids if v not in done), key=lambda v: dist[v])
        if dist[u] == float("inf"):
            break
        done.add(u)
        for v in ids:
            c = costs.get((u, v))
            if c is not None and dist[u] + c < dist[v]:
                dist[v] = dist[u] + c
    return dist


def path_cost(costs, path):
    return sum(costs[(u, v)] for u, v in zip(path, path[1:]))


# -- build_network / route ----------------------------------------------------------

def test_line_adjacency(line3):
    net = build_network(line3)
    assert net.adj["B"] == ["A", "C"]
    assert len(net.adj["B"]) == 2


def test_disconnected_pair_omitted():
    s = build(doc([node(0, "A"), node(1, "B"), node(2, "C")], [link("A", "B")]))
    net = build_network(s)
    assert "C" not in net.routes["A"]
    with pytest.raises(Unreachable):
        route(net, "A", "C")


def test_route_line(line3):
    assert route(build_network(line3), "A", "C") == ["A", "B", "C"]


def test_route_diamond_tie_break():
    s = build(doc([node(i, n) for i, n in enumerate("ABCD")],
                  [link("A", "C"), link("C", "D"), link("A", "B"), link("B", "D")]))
    assert route(build_network(s), "A", "D") == ["A", "B", "D"]


def test_route_prefers_cost_over_hops():
    s = build(doc([node(i, n) for i, n in enumerate("ABCD")],
                  [link("A", "D", cost=10), link("A", "B"), link("B", "C"), link("C", "D")]))
    assert route(build_network(s), "A", "D") == ["A", "B", "C", "D"]


def test_hundred_node_graph_matches_dijkstra_oracle():
    rng = random.Random(100)
    d = random_graph_doc(rng, 100, p=0.05, max_cost=9)
    net = build_network(build(d))
    costs = edge_costs(d)
    for src in [n["id"] for n in d["nodes"]]:
        dist = array_dijkstra(d, src)
        for dst, c in dist.items():
            if c == float("inf"):
                assert dst not in net.routes[src]
                continue
            path = route(net, src, dst)
            assert path[0] == src and path[-1] == dst
            assert path_cost(costs, path) == c


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 12))
def test_route_equals_exhaustive_enumeration(seed, n):
    rng = random.Random(seed)
    d = random_graph_doc(rng, n, p=0.3, max_cost=3)
    net = build_network(build(d))
    adj, costs = adjacency(d), edge_costs(d)
    ids = [x["id"] for x in d["nodes"]]
    for src in ids:
        for dst in ids:
            if src == dst:
                continue
            paths = all_simple_paths(adj, src, dst)
            if not paths:
                assert dst not in net.routes[src]
                continue
            best = min(path_cost(costs, p) for p in paths)
            expected = min(p for p in paths if path_cost(costs, p) == best)
            assert tuple(route(net, src, dst)) == expected


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 15))
def test_hop_by_hop_forwarding_follows_source_route(seed, n):
    d = random_graph_doc(random.Random(seed), n, p=0.35, max_cost=2)
    net = build_network(build(d))
    for src, table in net.routes.items():
        for dst, path in table.items():
            walked = [src]
            while walked[-1] != dst:
                walked.append(net.next_hop(walked[-1], dst))
            assert tuple(walked) == path


# -- traffic and forwarding ------------------------------------------------------------

def test_emit_schedules_at_interval(line3):
    s = build(line_doc(flows=[flow("A", "C", packets=10, interval=1000)]))
    sim = Simulation(s)
    sim.emit_traffic(0)
    times = sorted(e.time for e in sim.kernel._queue)
    assert times == list(range(0, 10_000, 1000))


def test_lossless_delivers_everything():
    s = build(line_doc(flows=[flow("A", "C", packets=10)]))
    sim = Simulation(s)
    sim.start_traffic()
    sim.run()
    st_ = sim.flow_stats[0]
    assert (st_.Pt, st_.Pd, st_.Pl, st_.in_flight) == (10, 10, 0, 0)


def test_two_hop_loss_matches_bernoulli():
    s = build(line_doc(loss=0.1, flows=[flow("A", "C", packets=10_000, interval=10)]))
    sim = Simulation(s)
    sim.start_traffic()
    sim.run()
    st_ = sim.flow_stats[0]
    # independent per-hop survival 0.9 * 0.9; binomial sd ~ 0.004
    assert abs(st_.Pd / st_.Pt - 0.81) <= 0.02
    assert st_.Pt == st_.Pd + st_.Pl


def test_unreachable_flow_errors_at_first_send():
    s = build(doc([node(0, "A"), node(1, "B")], [], [flow("A", "B")]))
    sim = Simulation(s)
    sim.start_traffic()
    with pytest.raises(Unreachable):
        sim.run()


def _packet(sim, src="A", dst="C"):
    sim.flow_stats[0].Pt += 1
    sim.flow_stats[0].in_flight += 1
    return Packet(0, 0, src, dst, 0)


def test_forward_outcomes():
    s = build(line_doc(flows=[flow("A", "C")]))
    sim = Simulation(s)
    p = _packet(sim)
    assert sim.forward(p, "B") == NextHop("C")
    assert sim.forward(p, "C") == Deliver()
    assert sim.flow_stats[0].Pd == 1


def test_forward_link_loss_drop():
    d = line_doc(flows=[flow("A", "C")])
    d["links"][0]["loss_prob"] = 1.0
    sim = Simulation(build(d))
    p = _packet(sim)
    assert sim.forward(p, "A") == Drop("link-loss")
    assert sim.flow_stats[0].Pl == 1
    assert sim.flow_stats[0].in_flight == 0


def test_forward_charges_per_class_energy():
    d = doc([node(0, "A", cls="iiot-sensor"), node(1, "B", cls="gateway"),
             node(2, "C", cls="scada-server")],
            [link("A", "B"), link("B", "C")], [flow("A", "C", packets=4)])
    sim = Simulation(build(d))
    sim.start_traffic()
    sim.run()
    assert sim.net.energy_mj["A"] == pytest.approx(4 * 0.05)
    assert sim.net.energy_mj["B"] == pytest.approx(4 * 0.02)
    assert sim.net.energy_mj["C"] == pytest.approx(4 * 0.01)


def test_energy_constants_configurable():
    d = line_doc(flows=[flow("A", "C", packets=2)],
                 assessment={"energy_per_packet_mj": {"it-host": 1.5}})
    sim = Simulation(build(d))
    sim.start_traffic()
    sim.run()
    assert sim.net.energy_mj == {"A": 3.0, "B": 3.0, "C": 3.0}


def test_zero_traffic_zero_energy(line3):
    sim = Simulation(line3)
    sim.run()
    assert set(sim.net.energy_mj.values()) == {0.0}


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), loss=st.floats(0, 1), horizon=st.integers(0, 20_000))
def test_conservation_at_every_horizon(seed, loss, horizon):
    s = build(line_doc(ids=("A", "B", "C", "D"), loss=loss, seed=seed,
                       flows=[flow("A", "D", packets=30, interval=300),
                              flow("D", "B", packets=20, interval=500)]))
    sim = Simulation(s)
    sim.start_traffic()
    energy = dict(sim.net.energy_mj)
    step = 0
    while step <= horizon:
        sim.run(until=step)
        for st_ in sim.flow_stats:
            assert st_.Pt == st_.Pd + st_.Pl + st_.in_flight
            assert min(st_.Pt, st_.Pd, st_.Pl, st_.in_flight) >= 0
        for n, e in sim.net.energy_mj.items():
            assert e >= energy[n]
        energy = dict(sim.net.energy_mj)
        step += 2500
    sim.run()
    assert all(st_.in_flight == 0 for st_ in sim.flow_stats)
