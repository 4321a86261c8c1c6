"""The skill dependency graph: versions, dependency/conflict edges, capabilities."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..capability import CapabilitySet, parse_capability_strings
from ..skillmodel import Skill
from ..versions import ConstraintExpr, SemVer

NodeKey = tuple[str, SemVer]
Installation = frozenset[NodeKey]


@dataclass(frozen=True)
class GraphDiagnostic:
    subject: str
    message: str


@dataclass
class DependencyGraph:
    """Skills x versions with dependency and conflict constraints.

    Every dependency/conflict target must name a known skill, and every
    named skill has at least one version.
    """

    versions: dict[str, tuple[SemVer, ...]] = field(default_factory=dict)
    deps: dict[NodeKey, tuple[tuple[str, ConstraintExpr], ...]] = field(default_factory=dict)
    conflicts: dict[NodeKey, tuple[tuple[str, ConstraintExpr], ...]] = field(default_factory=dict)
    caps: dict[NodeKey, CapabilitySet] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, vers in self.versions.items():
            if not vers:
                raise ValueError(f"skill {name!r} has no versions")
            self.versions[name] = tuple(sorted(set(vers)))
        for mapping, what in ((self.deps, "dependency"), (self.conflicts, "conflict")):
            for (name, ver), edges in mapping.items():
                if name not in self.versions or ver not in self.versions[name]:
                    raise ValueError(f"{what} edges attached to unknown node {name}@{ver}")
                for target, _constraint in edges:
                    if target not in self.versions:
                        raise ValueError(
                            f"{name}@{ver} has a {what} on unknown skill {target!r}"
                        )

    @property
    def skills(self) -> tuple[str, ...]:
        return tuple(sorted(self.versions))

    def nodes(self) -> tuple[NodeKey, ...]:
        return tuple(
            (name, ver) for name in self.skills for ver in self.versions[name]
        )

    def deps_of(self, node: NodeKey) -> tuple[tuple[str, ConstraintExpr], ...]:
        return self.deps.get(node, ())

    def conflicts_of(self, node: NodeKey) -> tuple[tuple[str, ConstraintExpr], ...]:
        return self.conflicts.get(node, ())

    def caps_of(self, node: NodeKey) -> CapabilitySet:
        return self.caps.get(node, CapabilitySet.bottom())

    def name_projection(self) -> dict[str, set[str]]:
        """Name-level adjacency: s -> q if any version of s depends on q."""
        adjacency: dict[str, set[str]] = {name: set() for name in self.versions}
        for (name, _ver), edges in self.deps.items():
            for target, _constraint in edges:
                adjacency[name].add(target)
        return adjacency

    @classmethod
    def from_skills(
        cls,
        skills: list[Skill],
        extra_records: list[dict] | None = None,
    ) -> tuple["DependencyGraph", list[GraphDiagnostic]]:
        """Build a graph from discovered skills, one version per manifest.

        `extra_records` (see load_graph_manifest) contributes additional
        versions, edges, and capability requirements for scenarios where
        not every version exists on disk. Dependency edges that point at
        names absent from the combined set cannot enter the graph
        (targets must exist); they are reported as diagnostics instead.
        """
        diagnostics: list[GraphDiagnostic] = []
        extra_records = extra_records or []
        versions: dict[str, set[SemVer]] = {}
        for skill in skills:
            versions.setdefault(skill.name, set()).add(skill.version)
        parsed_extra: list[tuple[NodeKey, dict]] = []
        for record in extra_records:
            name = str(record["name"])
            ver = SemVer.parse(str(record["version"]))
            versions.setdefault(name, set()).add(ver)
            parsed_extra.append(((name, ver), record))
        known = set(versions)

        deps: dict[NodeKey, tuple[tuple[str, ConstraintExpr], ...]] = {}
        conflicts: dict[NodeKey, tuple[tuple[str, ConstraintExpr], ...]] = {}
        caps: dict[NodeKey, CapabilitySet] = {}

        def attach(mapping, node, subject, edges):
            kept = []
            for target, constraint in edges:
                if target in known:
                    kept.append((target, constraint))
                else:
                    diagnostics.append(
                        GraphDiagnostic(
                            subject,
                            f"edge to unknown skill {target!r} ({constraint}) ignored",
                        )
                    )
            if kept:
                merged = dict.fromkeys(mapping.get(node, ()))
                merged.update(dict.fromkeys(kept))
                mapping[node] = tuple(merged)

        for skill in skills:
            node = (skill.name, skill.version)
            attach(deps, node, skill.id, skill.dependencies)
            caps[node] = caps.get(node, CapabilitySet.bottom()).join(skill.declared_capabilities)
        for node, record in parsed_extra:
            subject = f"{node[0]}@{node[1]}"
            attach(deps, node, subject, [
                (str(t), ConstraintExpr.parse(str(c)))
                for t, c in (record.get("deps") or {}).items()
            ])
            attach(conflicts, node, subject, [
                (str(t), ConstraintExpr.parse(str(c)))
                for t, c in (record.get("conflicts") or {}).items()
            ])
            declared, _unknown = parse_capability_strings(record.get("capabilities") or [])
            caps[node] = caps.get(node, CapabilitySet.bottom()).join(declared)

        graph = cls(
            versions={name: tuple(sorted(vers)) for name, vers in versions.items()},
            deps=deps,
            conflicts=conflicts,
            caps=caps,
        )
        return graph, diagnostics


def load_graph_manifest(path: str | Path) -> list[dict]:
    """Read extra graph records: a JSON list of
    {name, version, deps: {name: constraint}, conflicts: {name: constraint},
    capabilities: [...]} entries for versions that exist only as metadata.
    """
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(records, list):
        raise ValueError("graph manifest must contain a JSON list of records")
    for record in records:
        if not isinstance(record, dict) or "name" not in record or "version" not in record:
            raise ValueError("each graph manifest record needs 'name' and 'version'")
    return records


def detect_cycles(graph: DependencyGraph) -> list[str] | None:
    """Kahn's algorithm over the name-level projection.

    Returns a witness cycle (list of names) when one exists, else None.
    """
    adjacency = graph.name_projection()
    indegree = {name: 0 for name in adjacency}
    for targets in adjacency.values():
        for t in targets:
            indegree[t] += 1

    queue = sorted(name for name, deg in indegree.items() if deg == 0)
    seen = 0
    while queue:
        node = queue.pop(0)
        seen += 1
        inserted = []
        for t in sorted(adjacency[node]):
            indegree[t] -= 1
            if indegree[t] == 0:
                inserted.append(t)
        if inserted:
            queue = sorted(queue + inserted)
    if seen == len(adjacency):
        return None

    # Extract a concrete cycle from the leftover subgraph.
    remaining = {name for name, deg in indegree.items() if deg > 0}
    start = min(remaining)
    path = [start]
    positions = {start: 0}
    current = start
    while True:
        nxt = min(t for t in adjacency[current] if t in remaining)
        if nxt in positions:
            return path[positions[nxt]:]
        positions[nxt] = len(path)
        path.append(nxt)
        current = nxt
