"""Knowledge-base vulnerability matching and low/med/high classification."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .discovery import AssetProfile
from .errors import OutOfRange, ParseError, ValidationError
from .scenario import LEVELS, SeverityRules, _keys, _num, _str, _version

_SEVERITY_RANK = {level: i for i, level in enumerate(LEVELS)}


def parse_version(v: str) -> tuple[int, ...]:
    """Dotted-integer version as a comparable tuple; trailing zeros are ignored."""
    parts = [int(x) for x in v.split(".")]
    while len(parts) > 1 and parts[-1] == 0:
        parts.pop()
    return tuple(parts)


@dataclass(frozen=True)
class VulnRecord:
    id: str
    product: str
    version_min: str
    version_max: str
    base_score: float
    description: str = ""
    exploit_available: bool = False

    def matches(self, product: str, version: str) -> bool:
        if product != self.product:
            return False
        v = parse_version(version)
        return parse_version(self.version_min) <= v <= parse_version(self.version_max)


@dataclass(frozen=True)
class VulnerabilityFinding:
    asset: str
    vuln: str
    product: str
    version: str
    severity: str
    effective_score: float
    base_score: float
    exploit_available: bool
    asset_class: str = ""


def classify(base_score: float, sensitivity: str,
             rules: SeverityRules | None = None) -> tuple[str, float]:
    """Severity of a finding once data sensitivity has been folded in.

    The sensitivity bonus is added to the base score and capped at 10; the
    result is cut into bands at ``rules.high`` and ``rules.med``.
    """
    rules = rules or SeverityRules()
    if not 0.0 <= base_score <= 10.0:
        raise OutOfRange(f"base score {base_score} outside [0, 10]")
    if sensitivity not in rules.bonus:
        raise OutOfRange(f"unknown sensitivity {sensitivity!r}")
    effective = min(10.0, base_score + rules.bonus[sensitivity])
    if effective >= rules.high:
        return "high", effective
    if effective >= rules.med:
        return "med", effective
    return "low", effective


def scan(profiles: Iterable[AssetProfile], kb: Iterable[VulnRecord],
         rules: SeverityRules | None = None) -> list[VulnerabilityFinding]:
    kb = list(kb)
    findings = []
    for prof in profiles:
        rec = prof.asset
        for vuln in kb:
            hit = next(((p, v) for p, v in rec.software if vuln.matches(p, v)), None)
            if hit is None:
                continue
            severity, eff = classify(vuln.base_score, rec.data_sensitivity, rules)
            findings.append(VulnerabilityFinding(
                rec.node_id, vuln.id, hit[0], hit[1], severity, eff,
                vuln.base_score, vuln.exploit_available, rec.node_class))
    findings.sort(key=lambda f: (-_SEVERITY_RANK[f.severity], -f.effective_score,
                                 f.asset, f.vuln))
    return findings


_KB_KEYS = {"id", "product", "version_min", "version_max", "base_score", "description",
            "exploit_available"}


def kb_from_list(doc) -> list[VulnRecord]:
    if not isinstance(doc, list):
        raise ValidationError("kb", "expected a JSON array of records")
    out = []
    seen = set()
    for i, obj in enumerate(doc):
        path = f"kb[{i}]"
        _keys(obj, path, _KB_KEYS, set())
        rid = _str(obj["id"], f"{path}.id")
        if rid in seen:
            raise ValidationError(f"{path}.id", f"duplicate record id {rid!r}")
        seen.add(rid)
        vmin = _version(obj["version_min"], f"{path}.version_min")
        vmax = _version(obj["version_max"], f"{path}.version_max")
        if parse_version(vmin) > parse_version(vmax):
            raise ValidationError(f"{path}.version_max", "must not be below version_min")
        if not isinstance(obj["exploit_available"], bool):
            raise ValidationError(f"{path}.exploit_available", "expected a boolean")
        out.append(VulnRecord(
            rid, _str(obj["product"], f"{path}.product"), vmin, vmax,
            _num(obj["base_score"], f"{path}.base_score", 0.0, 10.0),
            _str(obj["description"], f"{path}.description"), obj["exploit_available"]))
    return out


def load_kb(path: str | Path | None = None) -> list[VulnRecord]:
    """Load a KB file, or the bundled demo KB when ``path`` is None."""
    if path is None:
        text = resources.files("aras.data").joinpath("vuln_kb.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed KB JSON: {exc}") from None
    return kb_from_list(doc)
