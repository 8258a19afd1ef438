"""Four-phase assessment run: discover, scan, assess, report."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .attacks import apply_attacks
from .discovery import AssetProfile, AssetRecord, Container, Sweep, map_containers, \
    profile_assets, schedule_sweep
from .kernel import KernelStats
from .metrics import AnomalyFlag, HealthReport, SeriesSet, dr, network_health, pdr
from .network import build_network
from .risk import AttackResult, Concern, RiskEntry, ThreatScenario, define_criteria, \
    derive_probability, enumerate_threats, iso27030_checks, load_threat_kb, rank_register, \
    score_risk, select_mitigation
from .scenario import Scenario
from .simulation import Simulation
from .vulnscan import VulnerabilityFinding, load_kb, scan

PHASES = ("discover", "scan", "assess", "report")


def close_phases(phases: Iterable[str] | None) -> tuple[str, ...]:
    """Requested phases plus every earlier phase they depend on."""
    if phases is None:
        return PHASES
    phases = list(phases)
    unknown = [p for p in phases if p not in PHASES]
    if unknown:
        raise ValueError(f"unknown phase(s) {unknown}; choose from {list(PHASES)}")
    if not phases:
        return ()
    last = max(PHASES.index(p) for p in phases)
    return PHASES[: last + 1]


@dataclass
class RunResult:
    scenario: Scenario
    phases: tuple[str, ...]
    until_us: int | None
    sim: Simulation
    kernel: KernelStats
    sweep: Sweep | None = None
    inventory: list[AssetRecord] = field(default_factory=list)
    profiles: list[AssetProfile] = field(default_factory=list)
    containers: list[Container] = field(default_factory=list)
    findings: list[VulnerabilityFinding] = field(default_factory=list)
    concerns: list[Concern] = field(default_factory=list)
    attack_results: list[AttackResult] = field(default_factory=list)
    threats: list[ThreatScenario] = field(default_factory=list)
    risk_register: list[RiskEntry] = field(default_factory=list)
    health: HealthReport | None = None
    anomalies: list[AnomalyFlag] = field(default_factory=list)

    def flow_metrics(self) -> list[dict[str, Any]]:
        out = []
        for i, (f, st) in enumerate(zip(self.scenario.flows, self.sim.flow_stats)):
            out.append({
                "flow": i, "src": f.src, "dst": f.dst,
                "Pt": st.Pt, "Pd": st.Pd, "Pl": st.Pl, "in_flight": st.in_flight,
                "pdr": pdr(st.Pd, st.Pt) if st.Pt else None,
                "dr": dr(st.Pl, st.Pt) if st.Pt else None,
                "drops": dict(sorted(st.drops.items())),
                "attack_drops_by_node": dict(sorted(st.drops_by_node.items())),
            })
        return out


def _resolve(scenario: Scenario, path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_absolute() and scenario.base_dir is not None:
        p = scenario.base_dir / p
    return p


def attack_results_for(scenario: Scenario, sim: Simulation) -> list[AttackResult]:
    """Per-flow outcomes of an attacked run; empty when no attack was configured."""
    if not scenario.attacks:
        return []
    out = []
    for i, (f, st) in enumerate(zip(scenario.flows, sim.flow_stats)):
        if st.Pt == 0:
            continue
        out.append(AttackResult(i, f.src, f.dst, st.Pt, st.Pd, st.Pl, pdr(st.Pd, st.Pt),
                                dr(st.Pl, st.Pt), tuple(sorted(st.drops_by_node))))
    return out


def run_pipeline(scenario: Scenario, phases: Iterable[str] | None = None,
                 until_us: int | None = None, discovery: bool | None = None) -> RunResult:
    """Simulate ``scenario`` and run the requested assessment phases over it.

    ``discovery`` forces the ping sweep on or off independently of the
    phase list; it exists for agentless comparisons.
    """
    phases = close_phases(phases)
    cfg = scenario.assessment
    sim = Simulation(scenario)
    apply_attacks(sim, scenario.attacks)
    sim.start_traffic()
    if discovery is None:
        discovery = "discover" in phases
    sweep = None
    if discovery:
        origin = cfg.probe_origin or scenario.nodes[0].id
        sweep = schedule_sweep(sim, origin, cfg.sweep_ranges, cfg.sweep_start_us)
    stats = sim.run(until_us)
    result = RunResult(scenario, phases, until_us, sim, stats, sweep)

    # static analyses see the configured topology, not a mid-attack one
    baseline = build_network(scenario)
    if "discover" in phases and sweep is not None:
        result.inventory = sweep.records
        if result.inventory:
            result.profiles = profile_assets(result.inventory, cfg)
            result.containers = map_containers(result.profiles, baseline, scenario.flows)
    if "scan" in phases:
        kb = load_kb(_resolve(scenario, cfg.kb))
        result.findings = scan(result.profiles, kb, cfg.severity_rules)
    if "assess" in phases:
        result.concerns = iso27030_checks(result.profiles, baseline, scenario.flows,
                                          cfg.version_floors)
        result.attack_results = attack_results_for(scenario, sim)
        threat_kb = load_threat_kb(_resolve(scenario, cfg.threat_kb))
        result.threats = enumerate_threats(result.findings, result.attack_results,
                                           result.concerns, threat_kb, cfg.pdr_threshold)
        criteria = define_criteria(cfg.impact_areas)
        entries = []
        for ts in result.threats:
            impacts = {a: ts.default_impact.get(a, "low") for a in criteria.names}
            prob = derive_probability(ts, result.attack_results, cfg.probability_rules)
            entry = score_risk(ts, prob, impacts, criteria)
            entries.append(dataclasses.replace(
                entry, mitigation=select_mitigation(entry, cfg.mitigation_bands)))
        result.risk_register = rank_register(entries)
        result.health = network_health(sim.net, scenario.flows)
    if "report" in phases:
        series = SeriesSet.from_rows(sim.metric_samples())
        an = cfg.anomaly
        result.anomalies = series.scan(an.window, an.k, an.absolute)
    return result
