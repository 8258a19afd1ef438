"""Run outputs: events.jsonl, metrics.csv, report.json, and report comparison."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import jsonschema

from .errors import SchemaMismatch
from .pipeline import RunResult

REPORT_KEYS = ("scenario", "inventory", "profiles", "containers", "findings", "concerns",
               "threats", "risk_register", "metrics", "anomalies", "health")

_ARR = {"type": "array"}
REPORT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": list(REPORT_KEYS),
    "additionalProperties": False,
    "properties": {
        "scenario": {
            "type": "object",
            "required": ["name", "master_seed", "phases", "nodes", "links", "flows", "attacks",
                         "kernel"],
            "properties": {"name": {"type": "string"},
                           "master_seed": {"type": "integer", "minimum": 0},
                           "phases": _ARR, "generated_at": {"type": "string"}},
        },
        "inventory": {"type": "array", "items": {
            "type": "object", "required": ["addr", "mac", "node_id", "os", "medium", "class"]}},
        "profiles": {"type": "array", "items": {
            "type": "object", "required": ["node_id", "owner", "value",
                                           "security_requirements", "most_important",
                                           "priority"]}},
        "containers": {"type": "array", "items": {
            "type": "object", "required": ["asset", "location", "mode"],
            "properties": {"mode": {"enum": ["stored", "transported", "processed"]}}}},
        "findings": {"type": "array", "items": {
            "type": "object", "required": ["asset", "vuln", "severity", "effective_score"],
            "properties": {"severity": {"enum": ["low", "med", "high"]}}}},
        "concerns": {"type": "array", "items": {
            "type": "object", "required": ["kind", "asset", "detail"]}},
        "threats": {"type": "array", "items": {
            "type": "object", "required": ["id", "asset", "source", "threat_name",
                                           "consequence", "evidence"],
            "properties": {"source": {"enum": ["kb", "simulation", "iso-check"]}}}},
        "risk_register": {"type": "array", "items": {
            "type": "object",
            "required": ["rank", "threat", "asset", "source", "threat_name", "probability",
                         "impact_values", "relative_impact", "risk_score", "score_max",
                         "mitigation", "evidence"],
            "properties": {
                "probability": {"enum": ["low", "med", "high"]},
                "mitigation": {"enum": ["mitigate", "defer", "accept", "transfer"]},
                "risk_score": {"type": "integer"},
                "relative_impact": {"type": "integer"}}}},
        "metrics": {
            "type": "object", "required": ["flows", "energy_mj", "attack_drops"],
            "properties": {"flows": {"type": "array", "items": {
                "type": "object", "required": ["flow", "src", "dst", "Pt", "Pd", "Pl", "pdr",
                                               "dr"]}}}},
        "anomalies": {"type": "array", "items": {
            "type": "object", "required": ["series", "t", "value", "mean", "std", "k",
                                           "reason"]}},
        "health": {"type": "object"},
    },
}


def validate_report(doc: Any) -> None:
    try:
        jsonschema.validate(doc, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaMismatch(f"report schema violation at {where}: {exc.message}") from None


def _r(x: float) -> float:
    return round(x, 9)


def build_report(result: RunResult, deterministic: bool = True,
                 generated_at: str | None = None) -> dict[str, Any]:
    s = result.scenario
    sim = result.sim
    scenario = {
        "name": s.name,
        "master_seed": s.master_seed,
        "phases": list(result.phases),
        "until_us": result.until_us,
        "nodes": len(s.nodes),
        "links": len(s.links),
        "flows": len(s.flows),
        "attacks": [{k: v for k, v in dataclasses.asdict(a).items() if v is not None}
                    for a in s.attacks],
        "kernel": {"events_executed": result.kernel.events_executed,
                   "clock_us": result.kernel.clock},
    }
    if not deterministic:
        scenario["generated_at"] = generated_at or datetime.now(timezone.utc).isoformat()
    if result.sweep is not None:
        scenario["sweep"] = {"origin": result.sweep.origin, "ranges": result.sweep.ranges,
                             "addresses_probed": result.sweep.addresses_probed,
                             "probes_sent": result.sweep.probes_sent}

    inventory = [{"addr": r.addr, "mac": r.mac, "node_id": r.node_id, "os": r.os,
                  "medium": r.medium, "class": r.node_class,
                  "software": [list(sw) for sw in r.software],
                  "data_sensitivity": r.data_sensitivity} for r in result.inventory]
    profiles = [{"node_id": p.node_id, "owner": p.owner, "value": p.value,
                 "security_requirements": list(p.security_requirements),
                 "most_important": p.most_important, "priority": p.priority}
                for p in result.profiles]
    containers = [dataclasses.asdict(c) for c in result.containers]
    findings = [{"asset": f.asset, "vuln": f.vuln, "product": f.product, "version": f.version,
                 "severity": f.severity, "effective_score": _r(f.effective_score),
                 "base_score": f.base_score, "exploit_available": f.exploit_available}
                for f in result.findings]
    concerns = [dataclasses.asdict(c) for c in result.concerns]
    threats = [{"id": t.id, "asset": t.asset, "source": t.source, "threat_name": t.threat_name,
                "consequence": t.consequence, "evidence": t.evidence,
                "financial_only": t.financial_only} for t in result.threats]
    register = [{"rank": i, "threat": e.scenario.id, "asset": e.scenario.asset,
                 "source": e.scenario.source, "threat_name": e.scenario.threat_name,
                 "probability": e.probability, "impact_values": dict(e.impact_values),
                 "relative_impact": e.relative_impact, "risk_score": e.risk_score,
                 "score_max": e.score_max, "mitigation": e.mitigation,
                 "evidence": e.scenario.evidence}
                for i, e in enumerate(result.risk_register, start=1)]
    metrics = {
        "flows": result.flow_metrics(),
        "energy_mj": {n: _r(v) for n, v in sim.net.energy_mj.items()},
        "attack_drops": dict(sorted(sim.attack_drops.items())),
        "sample_interval_us": s.assessment.sample_interval_us,
    }
    anomalies = [{"series": a.series, "t": a.t, "value": _r(a.value), "mean": _r(a.mean),
                  "std": _r(a.std), "k": a.k, "absolute": a.absolute, "reason": a.reason}
                 for a in result.anomalies]
    health = {}
    if result.health is not None:
        health = dataclasses.asdict(result.health)
    return {"scenario": scenario, "inventory": inventory, "profiles": profiles,
            "containers": containers, "findings": findings, "concerns": concerns,
            "threats": threats, "risk_register": register, "metrics": metrics,
            "anomalies": anomalies, "health": health}


def events_jsonl(result: RunResult) -> str:
    return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n"
                   for e in result.sim.log)


def metrics_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "node", "series", "value"])
    for t, node, series, value in result.sim.metric_samples():
        w.writerow([t, node, series, repr(_r(value))])
    return buf.getvalue()


def emit_run_report(result: RunResult, out_dir: str | Path,
                    deterministic: bool = True) -> dict[str, Path]:
    """Write events.jsonl, metrics.csv and report.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = build_report(result, deterministic)
    validate_report(report)
    paths = {"events": out / "events.jsonl", "metrics": out / "metrics.csv",
             "report": out / "report.json"}
    paths["events"].write_text(events_jsonl(result), encoding="utf-8")
    paths["metrics"].write_text(metrics_csv(result), encoding="utf-8")
    paths["report"].write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                               encoding="utf-8")
    return paths


def load_report(path: str | Path) -> dict[str, Any]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path}: not JSON: {exc}") from None
    validate_report(doc)
    return doc


def compare_reports(baseline: dict[str, Any], attacked: dict[str, Any]) -> dict[str, Any]:
    """Per-flow PDR deltas and the risks present only in ``attacked``."""
    validate_report(baseline)
    validate_report(attacked)
    bflows = baseline["metrics"]["flows"]
    aflows = attacked["metrics"]["flows"]
    if len(bflows) != len(aflows):
        raise SchemaMismatch(f"flow count differs: {len(bflows)} vs {len(aflows)}")
    deltas = []
    for b, a in zip(bflows, aflows):
        if (b["src"], b["dst"]) != (a["src"], a["dst"]):
            raise SchemaMismatch(f"flow {b['flow']} endpoints differ between reports")
        delta = None
        if b["pdr"] is not None and a["pdr"] is not None:
            delta = a["pdr"] - b["pdr"]
        deltas.append({"flow": b["flow"], "src": b["src"], "dst": b["dst"],
                       "baseline_pdr": b["pdr"], "attacked_pdr": a["pdr"], "delta_pdr": delta})
    known = {(e["asset"], e["threat_name"]) for e in baseline["risk_register"]}
    new_risks = [e for e in attacked["risk_register"]
                 if (e["asset"], e["threat_name"]) not in known]
    return {"flows": deltas, "new_risks": new_risks}
