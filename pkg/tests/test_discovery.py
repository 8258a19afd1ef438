import functools
import ipaddress
import random

import pytest

from aras.discovery import AssetRecord, map_containers, ping_sweep, profile_assets
from aras.errors import MissingClassDefault
from aras.network import build_network
from aras.pipeline import run_pipeline
from aras.scenario import AssessmentConfig
from aras.simulation import Simulation

from conftest import build, doc, flow, link, node
from test_network import adjacency, all_simple_paths, edge_costs, path_cost


def star_doc(n_responding=12, n_silent=1):
    nodes = [node(0, "hub", cls="switch", addr="192.168.1.1")]
    links = []
    for i in range(1, n_responding + n_silent + 1):
        nid = f"h{i:02d}"
        nodes.append(node(i, nid, addr=f"192.168.1.{10 + i}",
                          responds_to_ping=i <= n_responding))
        links.append(link("hub", nid))
    nodes.append(node(99, "far", addr="172.16.0.5"))
    links.append(link("hub", "far"))
    nodes.append(node(98, "island", addr="192.168.1.200"))
    return doc(nodes, links)


def oracle_discovered(d, origin, ranges):
    nets = [ipaddress.IPv4Network(r) for r in ranges]
    adj = adjacency(d)
    seen, stack = {origin}, [origin]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return {n["addr"] for n in d["nodes"]
            if n.get("responds_to_ping", True) and n["id"] in seen
            and any(ipaddress.IPv4Address(n["addr"]) in net for net in nets)}


def test_sweep_finds_responding_reachable_hosts():
    d = star_doc()
    recs = ping_sweep(Simulation(build(d)), "hub", ["192.168.1.0/24"])
    # hub + 12 responders; the silent host and the island are absent
    assert {r.addr for r in recs} == oracle_discovered(d, "hub", ["192.168.1.0/24"])
    assert len([r for r in recs if r.node_id != "hub"]) == 12
    assert [ipaddress.IPv4Address(r.addr) for r in recs] == \
        sorted(ipaddress.IPv4Address(r.addr) for r in recs)


def test_empty_range_list():
    assert ping_sweep(Simulation(build(star_doc())), "hub", []) == []


def test_other_range_excluded():
    recs = ping_sweep(Simulation(build(star_doc())), "hub", ["172.16.0.0/24"])
    assert [r.node_id for r in recs] == ["far"]


def test_records_mirror_node_specs():
    d = star_doc()
    s = build(d)
    for r in ping_sweep(Simulation(s), "hub", ["0.0.0.0/0"]):
        n = s.node(r.node_id)
        assert (r.addr, r.mac, r.os, r.medium, r.node_class) == \
            (n.addr, n.mac, n.os, n.medium, n.node_class)


def test_probes_cost_energy_but_not_flow_counters():
    d = star_doc()
    sim = Simulation(build(d))
    ping_sweep(sim, "hub", ["192.168.1.0/24"])
    assert sim.flow_stats == []
    assert sim.net.energy_mj["hub"] > 0
    assert sim.net.energy_mj["h13"] > 0  # silent host still receives the request
    assert sim.net.energy_mj["island"] == 0


@pytest.mark.parametrize("seed", range(20))
def test_randomized_sweep_matches_oracle(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 30)
    nodes, links = [], []
    for i in range(n):
        addr = f"10.{rng.choice([1, 2])}.0.{i + 1}"
        nodes.append(node(i, f"x{i}", addr=addr, responds_to_ping=rng.random() > 0.2))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 2.0 / n:
                links.append(link(f"x{i}", f"x{j}"))
    d = doc(nodes, links)
    origin = f"x{rng.randrange(n)}"
    ranges = rng.choice([["10.1.0.0/16"], ["10.0.0.0/8"], ["10.2.0.0/24", "10.1.0.0/30"]])
    recs = ping_sweep(Simulation(build(d)), origin, ranges)
    assert {r.addr for r in recs} == oracle_discovered(d, origin, ranges)


def test_agentless_flow_stats_unchanged():
    d = star_doc()
    d["links"] = [{**l, "loss_prob": 0.1} for l in d["links"]]
    d["flows"] = [flow("h01", "h05", packets=300), flow("far", "h02", packets=200)]
    d["assessment"] = {"probe_origin": "hub", "sweep_ranges": ["192.168.1.0/24"]}
    s = build(d)
    on = run_pipeline(s, ["discover"], discovery=True)
    off = run_pipeline(s, ["discover"], discovery=False)
    assert len(on.inventory) == 13 and off.inventory == []
    assert on.sim.flow_stats == off.sim.flow_stats


# -- profiling -----------------------------------------------------------------------

def rec(node_id, cls="it-host", sens="low", addr="10.0.0.1"):
    return AssetRecord(addr, "02:00:00:00:00:01", node_id, "", "wired", cls, (), sens)


def test_scada_outranks_sensor():
    profs = profile_assets([rec("s", "iiot-sensor"), rec("srv", "scada-server")],
                           AssessmentConfig())
    assert profs[0].node_id == "srv" and profs[0].priority == 1


def test_node_id_tie_break():
    profs = profile_assets([rec("b"), rec("a")], AssessmentConfig())
    assert [p.node_id for p in profs] == ["a", "b"]
    assert [p.priority for p in profs] == [1, 2]


def test_overrides_apply():
    cfg = AssessmentConfig(overrides={"a": {"value": "high", "owner": "ops"}})
    profs = profile_assets([rec("a", "iiot-sensor"), rec("b", "plc")], cfg)
    a = next(p for p in profs if p.node_id == "a")
    assert (a.value, a.owner) == ("high", "ops")
    assert a.most_important in a.security_requirements


def test_missing_class_default():
    cfg = AssessmentConfig(class_defaults={})
    with pytest.raises(MissingClassDefault):
        profile_assets([rec("a")], cfg)


def test_ranking_matches_comparator_oracle():
    rng = random.Random(3)
    classes = ["it-host", "iiot-sensor", "gateway", "plc", "scada-server", "switch", "router"]
    recs = [rec(f"a{rng.randrange(1000):03d}{i}", rng.choice(classes),
                rng.choice(["low", "med", "high"])) for i in range(20)]
    cfg = AssessmentConfig()
    order = {"low": 0, "med": 1, "high": 2}

    def cmp(x, y):
        vx, vy = order[cfg.class_defaults[x.node_class]["value"]], \
            order[cfg.class_defaults[y.node_class]["value"]]
        if vx != vy:
            return vy - vx
        sx, sy = order[x.data_sensitivity], order[y.data_sensitivity]
        if sx != sy:
            return sy - sx
        return (x.node_id > y.node_id) - (x.node_id < y.node_id)

    expected = [r.node_id for r in sorted(recs, key=functools.cmp_to_key(cmp))]
    profs = profile_assets(recs, cfg)
    assert [p.node_id for p in profs] == expected
    assert sorted(p.priority for p in profs) == list(range(1, 21))


# -- containers ----------------------------------------------------------------------

def test_asset_without_flows_is_only_stored():
    s = build(doc([node(0, "A"), node(1, "B")], [link("A", "B")]))
    profs = profile_assets([rec("A")], AssessmentConfig())
    cs = map_containers(profs, build_network(s), [])
    assert [(c.location, c.mode) for c in cs] == [("A", "stored")]


def test_flow_path_transports():
    s = build(doc([node(0, "A"), node(1, "B"), node(2, "C", cls="scada-server")],
                  [link("A", "B"), link("B", "C")], [flow("A", "C")]))
    profs = profile_assets([rec("A")], AssessmentConfig())
    cs = map_containers(profs, build_network(s), s.flows)
    assert {(c.location, c.mode) for c in cs} == {
        ("A", "stored"), ("A", "transported"), ("B", "transported"), ("C", "transported"),
        ("C", "processed")}


def test_mesh_containers_equal_path_union_oracle():
    rng = random.Random(11)
    ids = [f"m{i}" for i in range(9)]
    classes = ["gateway", "scada-server", "it-host", "iiot-sensor"]
    nodes = [node(i, v, cls=rng.choice(classes)) for i, v in enumerate(ids)]
    links = []
    for r in range(3):
        for c in range(3):
            if c < 2:
                links.append(link(f"m{3 * r + c}", f"m{3 * r + c + 1}", cost=rng.randint(1, 3)))
            if r < 2:
                links.append(link(f"m{3 * r + c}", f"m{3 * r + c + 3}", cost=rng.randint(1, 3)))
    flows = []
    while len(flows) < 5:
        a, b = rng.sample(ids, 2)
        flows.append(flow(a, b))
    d = doc(nodes, links, flows)
    s = build(d)
    adj, costs = adjacency(d), edge_costs(d)
    cls_of = {n["id"]: n["class"] for n in nodes}

    def oracle_path(a, b):
        paths = all_simple_paths(adj, a, b)
        best = min(path_cost(costs, p) for p in paths)
        return min(p for p in paths if path_cost(costs, p) == best)

    recs = [rec(v, cls_of[v], addr=f"10.0.0.{i + 1}") for i, v in enumerate(ids)]
    profs = profile_assets(recs, AssessmentConfig())
    expected = set()
    for v in ids:
        expected.add((v, v, "stored"))
        for f in flows:
            p = oracle_path(f["src"], f["dst"])
            if v in p:
                expected |= {(v, h, "transported") for h in p}
                expected |= {(v, e, "processed") for e in (f["src"], f["dst"])
                             if cls_of[e] in ("gateway", "scada-server")}
    got = {(c.asset, c.location, c.mode) for c in map_containers(profs, build_network(s),
                                                                  s.flows)}
    assert got == expected
