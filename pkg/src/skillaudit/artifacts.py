"""Deterministic artifacts: canonical JSON, lockfiles, and SBOM documents.

Canonical serialization pins sorted keys at every nesting level, 2-space
indentation, UTF-8 without BOM, and a trailing newline, so repeated runs
with an injected clock are byte-identical and content hashes are stable
across platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Mapping

from . import TOOL_NAME, __version__
from .analyzer import AnalysisReport
from .depgraph.graph import Installation
from .skillmodel import Skill
from .trust import level
from .versions import SemVer

LOCKFILE_VERSION = "1.0.0"
GENERATOR_ID = f"{TOOL_NAME} {__version__}"
HASH_PREFIX = "sha256:"


class LockRefused(RuntimeError):
    """Raised when a critical-status skill would enter the lockfile."""

    def __init__(self, skill_name: str):
        self.skill_name = skill_name
        super().__init__(
            f"refusing to lock {skill_name!r}: analysis status is critical "
            "(use force to override)"
        )


def canonical_json(value: object) -> bytes:
    """Serialize with sorted keys, 2-space indent, and a trailing newline."""
    text = json.dumps(
        value,
        sort_keys=True,
        indent=2,
        ensure_ascii=False,
        allow_nan=False,
    )
    return (text + "\n").encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def content_hash(data: bytes) -> str:
    return HASH_PREFIX + sha256_hex(data)


def format_timestamp(moment: datetime) -> str:
    return moment.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _round_score(score: float) -> float:
    # Pinned to 4 decimal places so float formatting cannot vary by platform.
    return round(float(score), 4)


def build_lockfile(
    installation: Installation,
    skills: Mapping[str, Skill],
    reports: Mapping[str, AnalysisReport],
    trust_scores: Mapping[str, float],
    *,
    now: datetime,
    force: bool = False,
) -> dict:
    """Serialize a resolved installation with per-skill content hashes.

    Skills whose analysis status is critical refuse to lock unless forced.
    The integrity field hashes the canonical serialization of the skills
    object, so any later edit of the map is detectable.
    """
    installed = sorted(installation)
    chosen = {name: ver for name, ver in installed}

    skills_obj: dict[str, dict] = {}
    for name, version in installed:
        skill = skills[name]
        report = reports.get(name)
        if report is not None and report.status.value == "critical" and not force:
            raise LockRefused(name)
        resolved_deps = {
            target: str(chosen[target])
            for target, _constraint in skill.dependencies
            if target in chosen
        }
        entry: dict = {
            "version": str(version),
            "format": skill.format.value,
            "hash": content_hash(skill.raw_bytes),
            "capabilities": sorted(skill.declared_capability_names),
            "trust_score": _round_score(trust_scores.get(name, 0.0)),
            "dependencies": resolved_deps,
        }
        if report is not None:
            entry["analysis"] = {
                "status": report.status.value,
                "findings_count": len(report.findings) + len(report.flow_findings),
                "max_severity": report.max_severity.name,
                "analyzed_at": format_timestamp(report.analyzed_at),
            }
        skills_obj[name] = entry

    return {
        "lockfile_version": LOCKFILE_VERSION,
        "generated_at": format_timestamp(now),
        "generated_by": GENERATOR_ID,
        "skills": skills_obj,
        "integrity": HASH_PREFIX + sha256_hex(canonical_json(skills_obj)),
    }


@dataclass(frozen=True)
class IntegrityViolation:
    subject: str  # skill name, or "<lockfile>" for the top-level hash
    expected: str
    actual: str

    def __str__(self) -> str:
        return f"{self.subject}: expected {self.expected}, got {self.actual}"


def verify_lockfile(
    lock: Mapping, skill_bytes: Mapping[str, bytes]
) -> list[IntegrityViolation]:
    """Recompute per-skill hashes and the top-level integrity hash."""
    violations: list[IntegrityViolation] = []
    skills_obj = lock.get("skills", {})
    for name in sorted(skills_obj):
        entry = skills_obj[name]
        expected = entry.get("hash", "")
        data = skill_bytes.get(name)
        if data is None:
            violations.append(IntegrityViolation(name, expected, "<missing content>"))
            continue
        actual = content_hash(data)
        if actual != expected:
            violations.append(IntegrityViolation(name, expected, actual))
    expected_integrity = lock.get("integrity", "")
    actual_integrity = HASH_PREFIX + sha256_hex(canonical_json(skills_obj))
    if actual_integrity != expected_integrity:
        violations.append(
            IntegrityViolation("<lockfile>", expected_integrity, actual_integrity)
        )
    return violations


def build_asbom(
    installation: Installation,
    skills: Mapping[str, Skill],
    reports: Mapping[str, AnalysisReport],
    trust_scores: Mapping[str, float],
    *,
    vulnerable: set[tuple[str, SemVer]] | None = None,
    affected_nodes: list[tuple[str, SemVer, bool]] | None = None,
    now: datetime,
) -> dict:
    """Inventory of installed skills in a CycloneDX-shaped document.

    Each component carries identity, hash, declared capabilities, trust
    metadata, and vulnerability status; the dependencies section lists
    resolved edges between components.
    """
    installed = sorted(installation)
    chosen = {name: ver for name, ver in installed}
    vulnerable = vulnerable or set()
    affected_map = {
        (name, ver): elevated for name, ver, elevated in (affected_nodes or [])
    }

    components = []
    dependencies = []
    for name, version in installed:
        skill = skills[name]
        report = reports.get(name)
        score = _round_score(trust_scores.get(name, 0.0))
        if (name, version) in vulnerable:
            vuln_status = "vulnerable"
        elif (name, version) in affected_map:
            vuln_status = "affected_elevated" if affected_map[(name, version)] else "affected"
        else:
            vuln_status = "none"
        ref = f"{name}@{version}"
        properties = [
            {"name": "skill:format", "value": skill.format.value},
            {"name": "skill:trust_score", "value": f"{score:.4f}"},
            {"name": "skill:trust_level", "value": level(score).code},
            {"name": "skill:vulnerability_status", "value": vuln_status},
        ]
        if report is not None:
            properties.append(
                {"name": "skill:analysis_status", "value": report.status.value}
            )
        for cap in sorted(skill.declared_capability_names):
            properties.append({"name": "skill:capability", "value": cap})
        components.append(
            {
                "type": "application",
                "bom-ref": ref,
                "name": name,
                "version": str(version),
                "description": skill.description,
                "hashes": [
                    {"alg": "SHA-256", "content": sha256_hex(skill.raw_bytes)}
                ],
                "properties": properties,
            }
        )
        depends_on = sorted(
            f"{target}@{chosen[target]}"
            for target, _constraint in skill.dependencies
            if target in chosen
        )
        dependencies.append({"ref": ref, "dependsOn": depends_on})

    return {
        "bomFormat": "CycloneDX",
        "specVersion": "1.6",
        "version": 1,
        "metadata": {
            "timestamp": format_timestamp(now),
            "tools": [{"name": TOOL_NAME, "version": __version__}],
        },
        "components": components,
        "dependencies": dependencies,
    }
