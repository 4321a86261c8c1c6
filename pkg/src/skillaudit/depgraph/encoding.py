"""CNF encoding of the resolution problem.

One Boolean variable per (skill, version); variable numbering is
lexicographic by skill name, then descending version, which together with
the solver's fixed branching order makes resolution deterministic and
biases ties toward the highest satisfying version.

Clause families:
  amo       at most one version per skill (pairwise exclusion)
  root      each requested skill resolves to some satisfying version
  dep       selecting (s,v) forces a satisfying version of each dependency
            (degenerates to a unit ban when nothing satisfies)
  conflict  selecting (s,v) excludes every conflicting (q,w)
  cap       unit ban on versions whose capabilities exceed the allowed set
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..capability import CapabilitySet
from ..versions import ConstraintExpr
from .graph import DependencyGraph, NodeKey


@dataclass(frozen=True)
class ClauseGroup:
    kind: str  # amo | root | dep | conflict | cap
    message: str


@dataclass
class CNF:
    num_vars: int
    clauses: list[list[int]] = field(default_factory=list)
    # Parallel to clauses: index into groups for diagnostics.
    clause_group: list[int] = field(default_factory=list)
    groups: list[ClauseGroup] = field(default_factory=list)

    def add_group(self, kind: str, message: str) -> int:
        self.groups.append(ClauseGroup(kind, message))
        return len(self.groups) - 1

    def add_clause(self, literals: list[int], group: int) -> None:
        self.clauses.append(literals)
        self.clause_group.append(group)


@dataclass
class Encoding:
    cnf: CNF
    var_of: dict[NodeKey, int]
    node_of: dict[int, NodeKey]


def encode(
    graph: DependencyGraph,
    roots: list[tuple[str, ConstraintExpr]],
    allowed: CapabilitySet,
) -> Encoding:
    """Encode the graph, root requirements, and capability policy as CNF."""
    var_of: dict[NodeKey, int] = {}
    node_of: dict[int, NodeKey] = {}
    for name in graph.skills:
        for ver in sorted(graph.versions[name], reverse=True):
            idx = len(var_of) + 1
            var_of[(name, ver)] = idx
            node_of[idx] = (name, ver)

    cnf = CNF(num_vars=len(var_of))

    for name in graph.skills:
        vers = sorted(graph.versions[name], reverse=True)
        if len(vers) > 1:
            group = cnf.add_group("amo", f"at most one version of {name!r} may be installed")
            for i in range(len(vers)):
                for j in range(i + 1, len(vers)):
                    cnf.add_clause(
                        [-var_of[(name, vers[i])], -var_of[(name, vers[j])]], group
                    )

    for name, constraint in roots:
        group = cnf.add_group("root", f"requested skill {name!r} with constraint {constraint}")
        satisfying = [
            var_of[(name, ver)]
            for ver in sorted(graph.versions.get(name, ()), reverse=True)
            if constraint.satisfied_by(ver)
        ]
        cnf.add_clause(satisfying, group)  # empty disjunction = immediately unsatisfiable

    for node in graph.nodes():
        x = var_of[node]
        for target, constraint in graph.deps_of(node):
            group = cnf.add_group(
                "dep", f"{node[0]}@{node[1]} depends on {target!r} {constraint}"
            )
            satisfying = [
                var_of[(target, ver)]
                for ver in sorted(graph.versions[target], reverse=True)
                if constraint.satisfied_by(ver)
            ]
            cnf.add_clause([-x] + satisfying, group)
        for target, constraint in graph.conflicts_of(node):
            group = cnf.add_group(
                "conflict", f"{node[0]}@{node[1]} conflicts with {target!r} {constraint}"
            )
            for ver in sorted(graph.versions[target], reverse=True):
                if constraint.satisfied_by(ver) and (target, ver) != node:
                    cnf.add_clause([-x, -var_of[(target, ver)]], group)

    for node in graph.nodes():
        if not graph.caps_of(node).is_subset_of(allowed):
            group = cnf.add_group(
                "cap",
                f"{node[0]}@{node[1]} requires capabilities beyond the allowed set",
            )
            cnf.add_clause([-var_of[node]], group)

    return Encoding(cnf=cnf, var_of=var_of, node_of=node_of)
