"""Scenario document: parsing, validation and the typed records it produces.

A scenario is one UTF-8 JSON object holding topology, traffic, attacks and
the assessment configuration. Unknown keys anywhere are rejected so typos do
not silently fall back to defaults.
"""

from __future__ import annotations

import ipaddress
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ParseError, ValidationError

NODE_CLASSES = ("it-host", "iiot-sensor", "gateway", "plc", "scada-server", "switch", "router")
MEDIA = ("wired", "wireless")
LEVELS = ("low", "med", "high")
LINK_CLASSES = ("ethernet", "wifi", "lora", "fieldbus")
ATTACK_KINDS = ("ip-dropping", "sinkhole")
CIA = ("confidentiality", "integrity", "availability")

MAX_U64 = 2**64 - 1
_MAC_RE = re.compile(r"^[0-9a-fA-F]{2}(:[0-9a-fA-F]{2}){5}$")

DEFAULT_ENERGY_MJ = {"iiot-sensor": 0.05, "gateway": 0.02}
DEFAULT_ENERGY_OTHER_MJ = 0.01

DEFAULT_IMPACT_AREAS = {
    "safety": 5,
    "availability": 4,
    "productivity": 3,
    "reputation": 2,
    "financial": 1,
}

DEFAULT_CLASS_PROFILES: dict[str, dict[str, Any]] = {
    "scada-server": {"owner": "control-engineering", "value": "high",
                     "requirements": ["availability", "integrity", "confidentiality"],
                     "most_important": "availability"},
    "plc": {"owner": "control-engineering", "value": "high",
            "requirements": ["availability", "integrity"], "most_important": "integrity"},
    "gateway": {"owner": "ot-network", "value": "med",
                "requirements": ["availability", "integrity"], "most_important": "availability"},
    "iiot-sensor": {"owner": "ot-network", "value": "low",
                    "requirements": ["integrity", "availability"], "most_important": "integrity"},
    "it-host": {"owner": "it-operations", "value": "med",
                "requirements": ["confidentiality", "integrity"], "most_important": "confidentiality"},
    "switch": {"owner": "it-network", "value": "med",
               "requirements": ["availability"], "most_important": "availability"},
    "router": {"owner": "it-network", "value": "med",
               "requirements": ["availability"], "most_important": "availability"},
}


@dataclass(frozen=True)
class NodeSpec:
    id: str
    addr: str
    mac: str
    node_class: str
    os: str = ""
    medium: str = "wired"
    responds_to_ping: bool = True
    software: tuple[tuple[str, str], ...] = ()
    data_sensitivity: str = "low"


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    latency_us: int = 1000
    loss_prob: float = 0.0
    cost: int = 1
    link_class: str = "ethernet"


@dataclass(frozen=True)
class FlowSpec:
    src: str
    dst: str
    packets: int
    interval_us: int = 1000
    start_us: int = 0


@dataclass(frozen=True)
class AttackConfig:
    kind: str
    target: str
    start_us: int = 0
    end_us: int | None = None  # None: never ends
    drop_prob: float | None = None
    advertised_cost: int | None = None

    def active(self, now: int) -> bool:
        return self.start_us <= now and (self.end_us is None or now < self.end_us)


@dataclass(frozen=True)
class SeverityRules:
    high: float = 7.0
    med: float = 4.0
    bonus: dict[str, float] = field(default_factory=lambda: {"low": 0.0, "med": 1.0, "high": 2.0})


@dataclass(frozen=True)
class AnomalyConfig:
    window: int = 20
    k: float = 3.0
    absolute: float | None = None


@dataclass
class AssessmentConfig:
    probe_origin: str | None = None
    sweep_ranges: list[str] = field(default_factory=lambda: ["0.0.0.0/0"])
    sweep_start_us: int = 0
    class_defaults: dict[str, dict[str, Any]] = field(
        default_factory=lambda: {k: dict(v) for k, v in DEFAULT_CLASS_PROFILES.items()})
    overrides: dict[str, dict[str, Any]] = field(default_factory=dict)
    impact_areas: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_IMPACT_AREAS))
    probability_rules: dict[str, float] = field(default_factory=lambda: {"dr_high": 0.5})
    mitigation_bands: dict[str, float] = field(
        default_factory=lambda: {"mitigate": 0.6, "defer": 0.35})
    pdr_threshold: float = 0.9
    version_floors: dict[str, str] = field(default_factory=dict)
    severity_rules: SeverityRules = field(default_factory=SeverityRules)
    anomaly: AnomalyConfig = field(default_factory=AnomalyConfig)
    sample_interval_us: int = 10_000
    energy_per_packet_mj: dict[str, float] = field(default_factory=dict)
    kb: str | None = None
    threat_kb: str | None = None

    def energy_for(self, node_class: str) -> float:
        if node_class in self.energy_per_packet_mj:
            return self.energy_per_packet_mj[node_class]
        return DEFAULT_ENERGY_MJ.get(node_class, DEFAULT_ENERGY_OTHER_MJ)


@dataclass
class Scenario:
    name: str
    nodes: list[NodeSpec]
    links: list[LinkSpec] = field(default_factory=list)
    flows: list[FlowSpec] = field(default_factory=list)
    attacks: list[AttackConfig] = field(default_factory=list)
    assessment: AssessmentConfig = field(default_factory=AssessmentConfig)
    master_seed: int = 0
    base_dir: Path | None = None

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


# -- validation helpers ------------------------------------------------------

def _keys(obj: Any, path: str, required: set[str], optional: set[str]) -> dict:
    if not isinstance(obj, dict):
        raise ValidationError(path, "expected an object")
    for key in obj:
        if key not in required and key not in optional:
            raise ValidationError(f"{path}.{key}" if path else key, "unknown key")
    for key in sorted(required):
        if key not in obj:
            raise ValidationError(f"{path}.{key}" if path else key, "missing required key")
    return obj


def _int(v: Any, path: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ValidationError(path, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ValidationError(path, f"must be <= {hi}, got {v}")
    return v


def _num(v: Any, path: str, lo: float | None = None, hi: float | None = None) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(path, f"expected a number, got {v!r}")
    if lo is not None and v < lo:
        raise ValidationError(path, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ValidationError(path, f"must be <= {hi}, got {v}")
    return float(v)


def _str(v: Any, path: str) -> str:
    if not isinstance(v, str):
        raise ValidationError(path, f"expected a string, got {v!r}")
    return v


def _enum(v: Any, path: str, choices: tuple[str, ...]) -> str:
    if v not in choices:
        raise ValidationError(path, f"expected one of {list(choices)}, got {v!r}")
    return v


def _bool(v: Any, path: str) -> bool:
    if not isinstance(v, bool):
        raise ValidationError(path, f"expected a boolean, got {v!r}")
    return v


def _list(v: Any, path: str) -> list:
    if not isinstance(v, list):
        raise ValidationError(path, "expected an array")
    return v


def _version(v: Any, path: str) -> str:
    s = _str(v, path)
    if not re.fullmatch(r"\d+(\.\d+)*", s):
        raise ValidationError(path, f"expected a dotted-integer version, got {s!r}")
    return s


# -- section parsers ----------------------------------------------------------

def _parse_node(obj: Any, path: str) -> NodeSpec:
    _keys(obj, path, {"id", "addr", "mac", "class"},
          {"os", "medium", "responds_to_ping", "software", "data_sensitivity"})
    node_id = _str(obj["id"], f"{path}.id")
    if not node_id:
        raise ValidationError(f"{path}.id", "must be non-empty")
    addr = _str(obj["addr"], f"{path}.addr")
    try:
        addr = str(ipaddress.IPv4Address(addr))
    except ValueError:
        raise ValidationError(f"{path}.addr", f"not an IPv4 address: {addr!r}") from None
    mac = _str(obj["mac"], f"{path}.mac")
    if not _MAC_RE.match(mac):
        raise ValidationError(f"{path}.mac", f"not a 48-bit MAC address: {mac!r}")
    software = []
    for i, item in enumerate(_list(obj.get("software", []), f"{path}.software")):
        ipath = f"{path}.software[{i}]"
        if not isinstance(item, list) or len(item) != 2:
            raise ValidationError(ipath, "expected [product, version]")
        software.append((_str(item[0], ipath + "[0]"), _version(item[1], ipath + "[1]")))
    return NodeSpec(
        id=node_id,
        addr=addr,
        mac=mac.lower(),
        node_class=_enum(obj["class"], f"{path}.class", NODE_CLASSES),
        os=_str(obj.get("os", ""), f"{path}.os"),
        medium=_enum(obj.get("medium", "wired"), f"{path}.medium", MEDIA),
        responds_to_ping=_bool(obj.get("responds_to_ping", True), f"{path}.responds_to_ping"),
        software=tuple(software),
        data_sensitivity=_enum(obj.get("data_sensitivity", "low"),
                               f"{path}.data_sensitivity", LEVELS),
    )


def _parse_link(obj: Any, path: str, ids: set[str]) -> LinkSpec:
    _keys(obj, path, {"a", "b"}, {"latency_us", "loss_prob", "cost", "class"})
    a, b = _str(obj["a"], f"{path}.a"), _str(obj["b"], f"{path}.b")
    for end in ("a", "b"):
        if obj[end] not in ids:
            raise ValidationError(f"{path}.{end}", f"unknown node {obj[end]!r}")
    if a == b:
        raise ValidationError(f"{path}.b", "self-loop")
    return LinkSpec(
        a=a, b=b,
        latency_us=_int(obj.get("latency_us", 1000), f"{path}.latency_us", lo=1),
        loss_prob=_num(obj.get("loss_prob", 0.0), f"{path}.loss_prob", 0.0, 1.0),
        cost=_int(obj.get("cost", 1), f"{path}.cost", lo=1),
        link_class=_enum(obj.get("class", "ethernet"), f"{path}.class", LINK_CLASSES),
    )


def _parse_flow(obj: Any, path: str, ids: set[str]) -> FlowSpec:
    _keys(obj, path, {"src", "dst", "packets"}, {"interval_us", "start_us"})
    for end in ("src", "dst"):
        if _str(obj[end], f"{path}.{end}") not in ids:
            raise ValidationError(f"{path}.{end}", f"unknown node {obj[end]!r}")
    if obj["src"] == obj["dst"]:
        raise ValidationError(f"{path}.dst", "src and dst must differ")
    return FlowSpec(
        src=obj["src"], dst=obj["dst"],
        packets=_int(obj["packets"], f"{path}.packets", lo=1),
        interval_us=_int(obj.get("interval_us", 1000), f"{path}.interval_us", lo=1),
        start_us=_int(obj.get("start_us", 0), f"{path}.start_us", lo=0),
    )


def parse_attack(obj: Any, path: str, ids: set[str] | None = None) -> AttackConfig:
    if not isinstance(obj, dict):
        raise ValidationError(path, "expected an object")
    kind = _enum(obj.get("kind"), f"{path}.kind", ATTACK_KINDS)
    specific = {"ip-dropping": "drop_prob", "sinkhole": "advertised_cost"}[kind]
    _keys(obj, path, {"kind", "target", specific}, {"start_us", "end_us"})
    target = _str(obj["target"], f"{path}.target")
    if ids is not None and target not in ids:
        raise ValidationError(f"{path}.target", f"unknown node {target!r}")
    start = _int(obj.get("start_us", 0), f"{path}.start_us", lo=0)
    end = obj.get("end_us")
    if end is not None:
        end = _int(end, f"{path}.end_us", lo=0)
        if end <= start:
            raise ValidationError(f"{path}.end_us", "must be greater than start_us")
    if kind == "ip-dropping":
        return AttackConfig(kind, target, start, end,
                            drop_prob=_num(obj["drop_prob"], f"{path}.drop_prob", 0.0, 1.0))
    return AttackConfig(kind, target, start, end,
                        advertised_cost=_int(obj["advertised_cost"],
                                             f"{path}.advertised_cost", lo=1))


def _parse_profile_fields(obj: Any, path: str, partial: bool) -> dict[str, Any]:
    req = set() if partial else {"owner", "value", "requirements", "most_important"}
    _keys(obj, path, req, {"owner", "value", "requirements", "most_important"})
    out: dict[str, Any] = {}
    if "owner" in obj:
        out["owner"] = _str(obj["owner"], f"{path}.owner")
    if "value" in obj:
        out["value"] = _enum(obj["value"], f"{path}.value", LEVELS)
    if "requirements" in obj:
        reqs = [_enum(r, f"{path}.requirements[{i}]", CIA)
                for i, r in enumerate(_list(obj["requirements"], f"{path}.requirements"))]
        if not reqs or len(set(reqs)) != len(reqs):
            raise ValidationError(f"{path}.requirements", "must be a non-empty set")
        out["requirements"] = reqs
    if "most_important" in obj:
        out["most_important"] = _enum(obj["most_important"], f"{path}.most_important", CIA)
    if "requirements" in out and "most_important" in out \
            and out["most_important"] not in out["requirements"]:
        raise ValidationError(f"{path}.most_important", "must be one of the requirements")
    return out


_ASSESSMENT_KEYS = {
    "probe_origin", "sweep_ranges", "sweep_start_us", "class_defaults", "overrides",
    "impact_areas", "probability_rules", "mitigation_bands", "pdr_threshold",
    "version_floors", "severity_rules", "anomaly", "sample_interval_us",
    "energy_per_packet_mj", "kb", "threat_kb",
}


def _parse_assessment(obj: Any, path: str, ids: set[str]) -> AssessmentConfig:
    _keys(obj, path, set(), _ASSESSMENT_KEYS)
    cfg = AssessmentConfig()
    if "probe_origin" in obj:
        origin = _str(obj["probe_origin"], f"{path}.probe_origin")
        if origin not in ids:
            raise ValidationError(f"{path}.probe_origin", f"unknown node {origin!r}")
        cfg.probe_origin = origin
    if "sweep_ranges" in obj:
        ranges = []
        for i, r in enumerate(_list(obj["sweep_ranges"], f"{path}.sweep_ranges")):
            rpath = f"{path}.sweep_ranges[{i}]"
            try:
                ranges.append(str(ipaddress.IPv4Network(_str(r, rpath), strict=False)))
            except ValueError:
                raise ValidationError(rpath, f"not an IPv4 CIDR range: {r!r}") from None
        cfg.sweep_ranges = ranges
    if "sweep_start_us" in obj:
        cfg.sweep_start_us = _int(obj["sweep_start_us"], f"{path}.sweep_start_us", lo=0)
    if "class_defaults" in obj:
        cd = obj["class_defaults"]
        if not isinstance(cd, dict):
            raise ValidationError(f"{path}.class_defaults", "expected an object")
        cfg.class_defaults = {}
        for cls, prof in cd.items():
            _enum(cls, f"{path}.class_defaults", NODE_CLASSES)
            cfg.class_defaults[cls] = _parse_profile_fields(
                prof, f"{path}.class_defaults.{cls}", partial=False)
    if "overrides" in obj:
        ov = obj["overrides"]
        if not isinstance(ov, dict):
            raise ValidationError(f"{path}.overrides", "expected an object")
        for node_id, prof in ov.items():
            if node_id not in ids:
                raise ValidationError(f"{path}.overrides.{node_id}", "unknown node")
            cfg.overrides[node_id] = _parse_profile_fields(
                prof, f"{path}.overrides.{node_id}", partial=True)
    if "impact_areas" in obj:
        areas = obj["impact_areas"]
        if not isinstance(areas, dict) or not areas:
            raise ValidationError(f"{path}.impact_areas", "expected a non-empty object")
        cfg.impact_areas = {name: _int(rank, f"{path}.impact_areas.{name}", lo=1)
                            for name, rank in areas.items()}
    if "probability_rules" in obj:
        pr = _keys(obj["probability_rules"], f"{path}.probability_rules", set(), {"dr_high"})
        cfg.probability_rules = {k: _num(v, f"{path}.probability_rules.{k}", 0.0, 1.0)
                                 for k, v in {**cfg.probability_rules, **pr}.items()}
    if "mitigation_bands" in obj:
        mb = _keys(obj["mitigation_bands"], f"{path}.mitigation_bands", set(),
                   {"mitigate", "defer"})
        bands = {k: _num(v, f"{path}.mitigation_bands.{k}", 0.0, 1.0)
                 for k, v in {**cfg.mitigation_bands, **mb}.items()}
        if bands["defer"] > bands["mitigate"]:
            raise ValidationError(f"{path}.mitigation_bands.defer", "must not exceed mitigate")
        cfg.mitigation_bands = bands
    if "pdr_threshold" in obj:
        cfg.pdr_threshold = _num(obj["pdr_threshold"], f"{path}.pdr_threshold", 0.0, 1.0)
    if "version_floors" in obj:
        vf = obj["version_floors"]
        if not isinstance(vf, dict):
            raise ValidationError(f"{path}.version_floors", "expected an object")
        cfg.version_floors = {p: _version(v, f"{path}.version_floors.{p}") for p, v in vf.items()}
    if "severity_rules" in obj:
        sr = _keys(obj["severity_rules"], f"{path}.severity_rules", set(),
                   {"high", "med", "bonus"})
        base = SeverityRules()
        bonus = dict(base.bonus)
        if "bonus" in sr:
            b = _keys(sr["bonus"], f"{path}.severity_rules.bonus", set(), set(LEVELS))
            bonus.update({k: _num(v, f"{path}.severity_rules.bonus.{k}", 0.0, 10.0)
                          for k, v in b.items()})
        high = _num(sr.get("high", base.high), f"{path}.severity_rules.high", 0.0, 10.0)
        med = _num(sr.get("med", base.med), f"{path}.severity_rules.med", 0.0, 10.0)
        if med > high:
            raise ValidationError(f"{path}.severity_rules.med", "must not exceed high")
        cfg.severity_rules = SeverityRules(high, med, bonus)
    if "anomaly" in obj:
        an = _keys(obj["anomaly"], f"{path}.anomaly", set(), {"window", "k", "absolute"})
        absolute = an.get("absolute")
        cfg.anomaly = AnomalyConfig(
            window=_int(an.get("window", 20), f"{path}.anomaly.window", lo=2),
            k=_num(an.get("k", 3.0), f"{path}.anomaly.k", lo=0.0),
            absolute=None if absolute is None else _num(absolute, f"{path}.anomaly.absolute"),
        )
    if "sample_interval_us" in obj:
        cfg.sample_interval_us = _int(obj["sample_interval_us"], f"{path}.sample_interval_us",
                                      lo=1)
    if "energy_per_packet_mj" in obj:
        ep = obj["energy_per_packet_mj"]
        if not isinstance(ep, dict):
            raise ValidationError(f"{path}.energy_per_packet_mj", "expected an object")
        for cls, v in ep.items():
            _enum(cls, f"{path}.energy_per_packet_mj", NODE_CLASSES)
            cfg.energy_per_packet_mj[cls] = _num(v, f"{path}.energy_per_packet_mj.{cls}", lo=0.0)
    for key in ("kb", "threat_kb"):
        if key in obj:
            setattr(cfg, key, _str(obj[key], f"{path}.{key}"))
    return cfg


_TOP_KEYS = {"name", "master_seed", "nodes", "links", "flows", "attacks", "assessment"}


def scenario_from_dict(doc: Any, base_dir: Path | None = None) -> Scenario:
    _keys(doc, "", {"name", "nodes"}, _TOP_KEYS)
    name = _str(doc["name"], "name")
    seed = _int(doc.get("master_seed", 0), "master_seed", 0, MAX_U64)

    nodes: list[NodeSpec] = []
    ids: set[str] = set()
    addrs: dict[str, int] = {}
    raw_nodes = _list(doc["nodes"], "nodes")
    if not raw_nodes:
        raise ValidationError("nodes", "at least one node is required")
    for i, raw in enumerate(raw_nodes):
        node = _parse_node(raw, f"nodes[{i}]")
        if node.id in ids:
            raise ValidationError(f"nodes[{i}].id", f"duplicate node id {node.id!r}")
        if node.addr in addrs:
            raise ValidationError(f"nodes[{i}].addr", f"duplicate address {node.addr}")
        ids.add(node.id)
        addrs[node.addr] = i
        nodes.append(node)

    links = [_parse_link(raw, f"links[{i}]", ids)
             for i, raw in enumerate(_list(doc.get("links", []), "links"))]
    seen_pairs: set[frozenset[str]] = set()
    for i, link in enumerate(links):
        pair = frozenset((link.a, link.b))
        if pair in seen_pairs:
            raise ValidationError(f"links[{i}]", f"duplicate link {link.a}-{link.b}")
        seen_pairs.add(pair)
    flows = [_parse_flow(raw, f"flows[{i}]", ids)
             for i, raw in enumerate(_list(doc.get("flows", []), "flows"))]
    attacks = [parse_attack(raw, f"attacks[{i}]", ids)
               for i, raw in enumerate(_list(doc.get("attacks", []), "attacks"))]
    assessment = _parse_assessment(doc.get("assessment", {}), "assessment", ids)
    return Scenario(name, nodes, links, flows, attacks, assessment, seed, base_dir)


def load_scenario(document: bytes | str, base_dir: Path | None = None) -> Scenario:
    """Parse and validate a scenario document.

    Raises ParseError for malformed JSON and ValidationError (with a path
    such as ``links[0].loss_prob``) for anything structurally wrong.
    """
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"scenario is not UTF-8: {exc}") from None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed scenario JSON: {exc}") from None
    return scenario_from_dict(doc, base_dir)


def load_scenario_file(path: str | Path) -> Scenario:
    path = Path(path)
    return load_scenario(path.read_bytes(), base_dir=path.parent)
