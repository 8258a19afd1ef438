"""Risk criteria, threat scenarios, probability x impact scoring and mitigation.

Relative impact is the rank-weighted sum of per-area impact values
(low=1, med=2, high=3); the risk score multiplies that by a probability
tier on the same 1..3 scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .discovery import AssetProfile
from .errors import BadRanks, DuplicateArea, MissingArea, ParseError, ValidationError
from .network import NetworkState, path_link_classes
from .scenario import LEVELS, FlowSpec
from .vulnscan import VulnerabilityFinding, parse_version

LEVEL_VALUE = {"low": 1, "med": 2, "high": 3}
MITIGATIONS = ("mitigate", "defer", "accept", "transfer")
LONG_LIFECYCLE_CLASSES = ("plc", "scada-server")


@dataclass(frozen=True)
class RiskCriteria:
    impact_areas: tuple[tuple[str, int], ...]
    scale: Mapping[str, int] = field(default_factory=lambda: dict(LEVEL_VALUE))

    @property
    def rank_total(self) -> int:
        return sum(rank for _, rank in self.impact_areas)

    @property
    def score_max(self) -> int:
        return 3 * 3 * self.rank_total

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.impact_areas]


def define_criteria(areas: Mapping[str, int] | Iterable[tuple[str, int]]) -> RiskCriteria:
    pairs = list(areas.items()) if isinstance(areas, Mapping) else [tuple(a) for a in areas]
    names = [name for name, _ in pairs]
    if len(set(names)) != len(names):
        raise DuplicateArea(f"impact area names must be unique: {names}")
    ranks = sorted(rank for _, rank in pairs)
    if ranks != list(range(1, len(pairs) + 1)):
        raise BadRanks(f"ranks must be a permutation of 1..{len(pairs)}, got {ranks}")
    return RiskCriteria(tuple((str(n), int(r)) for n, r in pairs))


@dataclass(frozen=True)
class Concern:
    kind: str
    asset: str
    detail: str


@dataclass(frozen=True)
class AttackResult:
    flow: int
    src: str
    dst: str
    Pt: int
    Pd: int
    Pl: int
    pdr: float
    dr: float
    attackers: tuple[str, ...] = ()


@dataclass(frozen=True)
class ThreatScenario:
    id: str
    asset: str
    source: str  # kb | simulation | iso-check
    threat_name: str
    consequence: str
    evidence: dict[str, Any] | None = None
    default_impact: Mapping[str, str] = field(default_factory=dict)
    financial_only: bool = False


@dataclass(frozen=True)
class RiskEntry:
    scenario: ThreatScenario
    probability: str
    impact_values: Mapping[str, str]
    relative_impact: int
    risk_score: int
    score_max: int
    mitigation: str | None = None


# -- threat knowledge base -----------------------------------------------------

@dataclass(frozen=True)
class ThreatEntry:
    name: str
    consequence: str
    impact: Mapping[str, str]
    classes: tuple[str, ...] = ()
    products: tuple[str, ...] = ()
    vuln_ids: tuple[str, ...] = ()
    requires_exploit: bool = False
    min_severity: str = "low"
    financial_only: bool = False

    def matches(self, finding: VulnerabilityFinding) -> bool:
        if self.classes and finding.asset_class not in self.classes:
            return False
        if self.products and finding.product not in self.products:
            return False
        if self.vuln_ids and finding.vuln not in self.vuln_ids:
            return False
        if self.requires_exploit and not finding.exploit_available:
            return False
        return LEVEL_VALUE[finding.severity] >= LEVEL_VALUE[self.min_severity]


@dataclass(frozen=True)
class ThreatKB:
    threats: tuple[ThreatEntry, ...]
    simulation: ThreatEntry
    iso: Mapping[str, ThreatEntry]


def _threat_entry(obj: Any, path: str, with_match: bool) -> ThreatEntry:
    allowed = {"name", "consequence", "impact", "financial_only"}
    if with_match:
        allowed |= {"match"}
    if not isinstance(obj, dict):
        raise ValidationError(path, "expected an object")
    for key in obj:
        if key not in allowed:
            raise ValidationError(f"{path}.{key}", "unknown key")
    for key in ("name", "consequence", "impact"):
        if key not in obj:
            raise ValidationError(f"{path}.{key}", "missing required key")
    impact = obj["impact"]
    if not isinstance(impact, dict) or any(v not in LEVELS for v in impact.values()):
        raise ValidationError(f"{path}.impact", "expected {area: low|med|high}")
    match = obj.get("match", {})
    unknown = set(match) - {"classes", "products", "vuln_ids", "requires_exploit",
                            "min_severity"}
    if unknown:
        raise ValidationError(f"{path}.match.{sorted(unknown)[0]}", "unknown key")
    return ThreatEntry(
        name=obj["name"], consequence=obj["consequence"], impact=dict(impact),
        classes=tuple(match.get("classes", ())), products=tuple(match.get("products", ())),
        vuln_ids=tuple(match.get("vuln_ids", ())),
        requires_exploit=bool(match.get("requires_exploit", False)),
        min_severity=match.get("min_severity", "low"),
        financial_only=bool(obj.get("financial_only", False)),
    )


def threat_kb_from_dict(doc: Any) -> ThreatKB:
    if not isinstance(doc, dict) or set(doc) != {"threats", "simulation", "iso"}:
        raise ValidationError("threat_kb", "expected keys threats, simulation, iso")
    threats = tuple(_threat_entry(t, f"threat_kb.threats[{i}]", True)
                    for i, t in enumerate(doc["threats"]))
    sim = _threat_entry(doc["simulation"], "threat_kb.simulation", False)
    iso = {kind: _threat_entry(t, f"threat_kb.iso.{kind}", False)
           for kind, t in doc["iso"].items()}
    return ThreatKB(threats, sim, iso)


def load_threat_kb(path: str | Path | None = None) -> ThreatKB:
    if path is None:
        text = resources.files("aras.data").joinpath("threat_kb.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    try:
        return threat_kb_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed threat KB JSON: {exc}") from None


# -- threat enumeration ----------------------------------------------------------

def enumerate_threats(findings: Iterable[VulnerabilityFinding],
                      attack_results: Iterable[AttackResult],
                      concerns: Iterable[Concern],
                      threat_kb: ThreatKB,
                      pdr_threshold: float = 0.9) -> list[ThreatScenario]:
    """Collect threat scenarios from every evidence source.

    Simulation evidence comes first, then knowledge-base matches, then ISO
    control concerns; the first scenario for a given (asset, threat) wins.
    """
    raw: list[dict[str, Any]] = []
    degraded = sorted((r for r in attack_results if r.pdr < pdr_threshold),
                      key=lambda r: (r.pdr, r.flow))
    for r in degraded:
        t = threat_kb.simulation
        raw.append(dict(asset=r.dst, source="simulation", threat_name=t.name,
                        consequence=t.consequence, default_impact=t.impact,
                        financial_only=t.financial_only,
                        evidence={"flow": r.flow, "src": r.src, "dst": r.dst,
                                  "Pt": r.Pt, "Pd": r.Pd, "Pl": r.Pl,
                                  "pdr": r.pdr, "dr": r.dr, "attackers": list(r.attackers)}))
    for f in findings:
        for t in threat_kb.threats:
            if t.matches(f):
                raw.append(dict(asset=f.asset, source="kb", threat_name=t.name,
                                consequence=t.consequence, default_impact=t.impact,
                                financial_only=t.financial_only,
                                evidence={"vuln": f.vuln, "severity": f.severity,
                                          "effective_score": f.effective_score,
                                          "exploit_available": f.exploit_available}))
    for c in concerns:
        t = threat_kb.iso.get(c.kind)
        if t is None:
            continue
        raw.append(dict(asset=c.asset, source="iso-check", threat_name=t.name,
                        consequence=t.consequence, default_impact=t.impact,
                        financial_only=t.financial_only,
                        evidence={"concern": c.kind, "detail": c.detail}))
    seen: set[tuple[str, str]] = set()
    out = []
    for item in raw:
        key = (item["asset"], item["threat_name"])
        if key in seen:
            continue
        seen.add(key)
        out.append(ThreatScenario(id=f"TS-{len(out) + 1:03d}", **item))
    return out


# -- scoring -------------------------------------------------------------------

def relative_impact(impact_values: Mapping[str, str], criteria: RiskCriteria) -> int:
    missing = [name for name in criteria.names if name not in impact_values]
    if missing:
        raise MissingArea(f"no impact value for area(s) {missing}")
    return sum(rank * LEVEL_VALUE[impact_values[name]] for name, rank in criteria.impact_areas)


def score_risk(scenario: ThreatScenario, probability: str,
               impact_values: Mapping[str, str], criteria: RiskCriteria) -> RiskEntry:
    rel = relative_impact(impact_values, criteria)
    values = {name: impact_values[name] for name in criteria.names}
    return RiskEntry(scenario, probability, values, rel, LEVEL_VALUE[probability] * rel,
                     criteria.score_max)


def derive_probability(scenario: ThreatScenario,
                       attack_results: Sequence[AttackResult] = (),
                       rules: Mapping[str, float] | None = None) -> str:
    dr_high = (rules or {}).get("dr_high", 0.5)
    ev = scenario.evidence or {}
    if scenario.source == "simulation":
        dr = ev.get("dr", 0.0)
        for r in attack_results:
            if r.flow == ev.get("flow"):
                dr = r.dr
        return "high" if dr > dr_high else "low"
    if scenario.source == "kb":
        return "high" if ev.get("exploit_available") else "med"
    return "low"


def select_mitigation(entry: RiskEntry, bands: Mapping[str, float] | None = None) -> str:
    bands = bands or {"mitigate": 0.6, "defer": 0.35}
    ratio = entry.risk_score / entry.score_max
    if ratio >= bands["mitigate"]:
        band = "mitigate"
    elif ratio >= bands["defer"]:
        band = "defer"
    else:
        band = "accept"
    if entry.scenario.financial_only and band != "accept":
        return "transfer"
    return band


def rank_register(entries: Iterable[RiskEntry]) -> list[RiskEntry]:
    return sorted(entries, key=lambda e: (-e.risk_score, e.scenario.asset,
                                          e.scenario.threat_name, e.scenario.id))


# -- ISO/IEC 27030 control checks ------------------------------------------------

def vendor_of(product: str) -> str | None:
    """Vendor prefix of a ``vendor/product`` name; None when unqualified."""
    return product.split("/", 1)[0] if "/" in product else None


def iso27030_checks(profiles: Iterable[AssetProfile], net: NetworkState,
                    flows: Iterable[FlowSpec] = (),
                    version_floors: Mapping[str, str] | None = None) -> list[Concern]:
    version_floors = version_floors or {}
    by_node = {p.node_id: p for p in profiles}
    found: dict[tuple[str, str], Concern] = {}

    def add(kind: str, asset: str, detail: str) -> None:
        found.setdefault((asset, kind), Concern(kind, asset, detail))

    for node_id, prof in by_node.items():
        cls = prof.asset.node_class
        if cls in LONG_LIFECYCLE_CLASSES:
            for product, version in prof.asset.software:
                floor = version_floors.get(product)
                if floor is not None and parse_version(version) < parse_version(floor):
                    add("long-lifecycle", node_id, f"{product} {version} below floor {floor}")
        if cls == "iiot-sensor":
            add("constrained-device", node_id, "reduced instruction set and performance")

    for i, f in enumerate(flows):
        path = net.routes.get(f.src, {}).get(f.dst)
        if path is None:
            continue
        classes = path_link_classes(net, path)
        if len(classes) > 1:
            for end in (f.src, f.dst):
                if end in by_node:
                    add("heterogeneity", end, f"flows[{i}] crosses {'+'.join(classes)}")
        if f.src in by_node and f.dst in by_node:
            vs = {vendor_of(p) for p, _ in by_node[f.src].asset.software} - {None}
            vd = {vendor_of(p) for p, _ in by_node[f.dst].asset.software} - {None}
            if vs and vd and not vs & vd:
                detail = f"flows[{i}] {'/'.join(sorted(vs))} <-> {'/'.join(sorted(vd))}"
                add("vendor-mix", f.src, detail)
                add("vendor-mix", f.dst, detail)
    return [found[k] for k in sorted(found)]
