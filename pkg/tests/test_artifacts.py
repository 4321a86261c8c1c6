"""Canonical JSON, lockfile build/verify, and SBOM documents."""

import json
import re
from datetime import datetime, timezone

import pytest

from skillaudit.analyzer import analyze
from skillaudit.artifacts import (
    LockRefused,
    build_asbom,
    build_lockfile,
    canonical_json,
    content_hash,
    verify_lockfile,
)
from skillaudit.capability import CapabilitySet
from skillaudit.depgraph import DependencyGraph, resolve
from skillaudit.skillmodel import parse_file
from skillaudit.versions import ConstraintExpr, SemVer

NOW = datetime(2026, 2, 26, 14, 30, 0, tzinfo=timezone.utc)
HASH_RE = re.compile(r"^sha256:[a-f0-9]{64}$")


def _demo_state(lockdemo_dir):
    skills = []
    for path in sorted(lockdemo_dir.iterdir()):
        skills.extend(parse_file(path, root=lockdemo_dir))
    reports = {s.id: analyze(s, now=NOW) for s in skills}
    graph, _ = DependencyGraph.from_skills(skills)
    roots = [(name, ConstraintExpr.any()) for name in graph.skills]
    installation, diag = resolve(graph, roots, CapabilitySet.top())
    assert diag.verdict == "sat"
    skills_by_name = {s.name: s for s in skills}
    reports_by_name = {s.name: reports[s.id] for s in skills}
    trust = {"api-client": 0.68, "file-manager": 0.85, "json-formatter": 0.72}
    return graph, installation, skills_by_name, reports_by_name, trust


class TestCanonicalJson:
    def test_keys_sorted_at_all_levels(self):
        data = canonical_json({"b": 1, "a": {"z": 0, "y": [1, 2]}})
        text = data.decode("utf-8")
        assert text.index('"a"') < text.index('"b"')
        assert text.index('"y"') < text.index('"z"')

    def test_identical_bytes_for_identical_values(self):
        value = {"k": [1, 2.5, "x"], "m": {"n": True}}
        assert canonical_json(value) == canonical_json(value)

    def test_empty_map(self):
        assert canonical_json({}) == b"{}\n"

    def test_utf8_no_bom_trailing_newline(self):
        data = canonical_json({"name": "café"})
        assert not data.startswith(b"\xef\xbb\xbf")
        assert data.endswith(b"\n")
        assert "café" in data.decode("utf-8")

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            canonical_json({"x": float("nan")})


class TestLockfile:
    def test_structure_matches_schema(self, lockdemo_dir):
        _g, installation, skills, reports, trust = _demo_state(lockdemo_dir)
        lock = build_lockfile(installation, skills, reports, trust, now=NOW)
        assert lock["lockfile_version"] == "1.0.0"
        assert lock["generated_at"] == "2026-02-26T14:30:00Z"
        assert lock["generated_by"].startswith("skillaudit ")
        assert list(lock["skills"]) == sorted(lock["skills"])
        assert HASH_RE.match(lock["integrity"])
        for name, entry in lock["skills"].items():
            assert set(entry) >= {
                "version", "format", "hash", "capabilities", "trust_score",
                "dependencies", "analysis",
            }
            assert HASH_RE.match(entry["hash"])
            assert entry["format"] in ("claude", "mcp", "openclaw")
            assert 0.0 <= entry["trust_score"] <= 1.0
            assert entry["analysis"]["status"] in ("clean", "warning", "critical")
            assert entry["analysis"]["max_severity"] in (
                "NONE", "LOW", "MEDIUM", "HIGH", "CRITICAL"
            )

    def test_scenario_versions_statuses_and_resolved_deps(self, lockdemo_dir):
        _g, installation, skills, reports, trust = _demo_state(lockdemo_dir)
        lock = build_lockfile(installation, skills, reports, trust, now=NOW)
        entries = lock["skills"]
        assert entries["api-client"]["version"] == "3.0.1"
        assert entries["file-manager"]["version"] == "2.1.0"
        assert entries["json-formatter"]["version"] == "1.2.0"
        assert entries["api-client"]["analysis"]["status"] == "warning"
        assert entries["api-client"]["analysis"]["findings_count"] == 1
        assert entries["api-client"]["analysis"]["max_severity"] == "LOW"
        assert entries["file-manager"]["analysis"]["status"] == "clean"
        assert entries["json-formatter"]["analysis"]["status"] == "clean"
        # dependency recorded with the resolved version, not the constraint
        assert entries["json-formatter"]["dependencies"] == {"file-manager": "2.1.0"}

    def test_byte_identical_with_fixed_clock(self, lockdemo_dir):
        _g, installation, skills, reports, trust = _demo_state(lockdemo_dir)
        a = canonical_json(build_lockfile(installation, skills, reports, trust, now=NOW))
        b = canonical_json(build_lockfile(installation, skills, reports, trust, now=NOW))
        assert a == b

    def test_verify_round_trip_and_tamper_detection(self, lockdemo_dir):
        _g, installation, skills, reports, trust = _demo_state(lockdemo_dir)
        lock = build_lockfile(installation, skills, reports, trust, now=NOW)
        original = {name: skills[name].raw_bytes for name in skills}
        assert verify_lockfile(lock, original) == []

        tampered = dict(original)
        tampered["file-manager"] = original["file-manager"] + b"#"
        violations = verify_lockfile(lock, tampered)
        assert [v.subject for v in violations] == ["file-manager"]

        edited = json.loads(canonical_json(lock).decode())
        edited["skills"]["api-client"]["version"] = "9.9.9"
        violations = verify_lockfile(edited, original)
        assert any(v.subject == "<lockfile>" for v in violations)

    def test_critical_status_refused_unless_forced(self, trio_dir):
        skills = []
        for path in sorted(trio_dir.iterdir()):
            skills.extend(parse_file(path, root=trio_dir))
        reports = {s.name: analyze(s, now=NOW) for s in skills}
        by_name = {s.name: s for s in skills}
        installation = frozenset((s.name, s.version) for s in skills)
        with pytest.raises(LockRefused):
            build_lockfile(installation, by_name, reports, {}, now=NOW)
        lock = build_lockfile(installation, by_name, reports, {}, now=NOW, force=True)
        assert len(lock["skills"]) == 3

    def test_trust_scores_rounded(self, lockdemo_dir):
        _g, installation, skills, reports, _ = _demo_state(lockdemo_dir)
        trust = {"api-client": 0.123456789, "file-manager": 0.5, "json-formatter": 1.0}
        lock = build_lockfile(installation, skills, reports, trust, now=NOW)
        assert lock["skills"]["api-client"]["trust_score"] == 0.1235


class TestAsbom:
    def test_components_and_dependencies(self, lockdemo_dir):
        _g, installation, skills, reports, trust = _demo_state(lockdemo_dir)
        doc = build_asbom(installation, skills, reports, trust, now=NOW)
        assert doc["bomFormat"] == "CycloneDX"
        assert doc["specVersion"] == "1.6"
        assert len(doc["components"]) == 3
        names = [c["name"] for c in doc["components"]]
        assert names == sorted(names)
        refs = {c["bom-ref"] for c in doc["components"]}
        for dep in doc["dependencies"]:
            assert dep["ref"] in refs
            assert all(target in refs for target in dep["dependsOn"])
        jf = next(d for d in doc["dependencies"] if d["ref"].startswith("json-formatter"))
        assert jf["dependsOn"] == ["file-manager@2.1.0"]

    def test_trust_level_property(self, lockdemo_dir):
        _g, installation, skills, reports, _ = _demo_state(lockdemo_dir)
        trust = {"api-client": 0.54, "file-manager": 0.9, "json-formatter": 0.1}
        doc = build_asbom(installation, skills, reports, trust, now=NOW)
        by_name = {c["name"]: c for c in doc["components"]}

        def prop(component, key):
            return next(p["value"] for p in component["properties"] if p["name"] == key)

        assert prop(by_name["api-client"], "skill:trust_level") == "L2"
        assert prop(by_name["file-manager"], "skill:trust_level") == "L3"
        assert prop(by_name["json-formatter"], "skill:trust_level") == "L0"

    def test_vulnerability_status(self, lockdemo_dir):
        _g, installation, skills, reports, trust = _demo_state(lockdemo_dir)
        bad = ("file-manager", SemVer(2, 1, 0))
        doc = build_asbom(
            installation, skills, reports, trust,
            vulnerable={bad},
            affected_nodes=[("json-formatter", SemVer(1, 2, 0), True)],
            now=NOW,
        )
        by_name = {c["name"]: c for c in doc["components"]}

        def status(component):
            return next(
                p["value"] for p in component["properties"]
                if p["name"] == "skill:vulnerability_status"
            )

        assert status(by_name["file-manager"]) == "vulnerable"
        assert status(by_name["json-formatter"]) == "affected_elevated"
        assert status(by_name["api-client"]) == "none"

    def test_empty_installation(self):
        doc = build_asbom(frozenset(), {}, {}, {}, now=NOW)
        assert doc["components"] == [] and doc["dependencies"] == []

    def test_hash_matches_content(self, lockdemo_dir):
        _g, installation, skills, reports, trust = _demo_state(lockdemo_dir)
        doc = build_asbom(installation, skills, reports, trust, now=NOW)
        for component in doc["components"]:
            skill = skills[component["name"]]
            digest = component["hashes"][0]["content"]
            assert content_hash(skill.raw_bytes) == f"sha256:{digest}"
