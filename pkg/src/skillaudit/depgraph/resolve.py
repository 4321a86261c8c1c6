"""Resolution: cycle check, SAT solve, installation extraction, diagnostics.

Unsat instances yield a deletion-minimized core of human-readable
constraint descriptions. Satisfiable instances yield the installation
restricted to the closure reachable from the requested roots.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..capability import CapabilitySet
from ..versions import ConstraintExpr, SemVer
from .encoding import Encoding, encode
from .graph import DependencyGraph, Installation, NodeKey, detect_cycles
from .solver import solve


@dataclass
class ResolutionDiagnostic:
    verdict: str  # sat | unsat | cycle
    core: list[str] = field(default_factory=list)
    cycle_path: list[str] = field(default_factory=list)
    trust_threshold: float | None = None


def _solve_groups(encoding: Encoding, included: set[int]) -> list[bool] | None:
    cnf = encoding.cnf
    clauses = [c for c, g in zip(cnf.clauses, cnf.clause_group) if g in included]
    return solve(cnf.num_vars, clauses)


def _unsat_core(encoding: Encoding) -> list[str]:
    """Deletion-based minimization over constraint-keyed clause groups."""
    cnf = encoding.cnf
    present = sorted({g for g in cnf.clause_group})
    kept = set(present)
    for group in present:
        trial = kept - {group}
        if _solve_groups(encoding, trial) is None:
            kept = trial
    return [cnf.groups[g].message for g in sorted(kept)]


def _installation_from_model(
    encoding: Encoding,
    graph: DependencyGraph,
    roots: list[tuple[str, ConstraintExpr]],
    model: list[bool],
) -> Installation:
    chosen: dict[str, SemVer] = {}
    for (name, ver), var in encoding.var_of.items():
        if model[var]:
            chosen[name] = ver
    result: set[NodeKey] = set()
    queue = [name for name, _ in roots]
    while queue:
        name = queue.pop()
        if name not in chosen:
            continue
        node = (name, chosen[name])
        if node in result:
            continue
        result.add(node)
        for target, _constraint in graph.deps_of(node):
            queue.append(target)
    return frozenset(result)


def resolve(
    graph: DependencyGraph,
    roots: list[tuple[str, ConstraintExpr]],
    allowed: CapabilitySet,
    *,
    trust_scores: dict[NodeKey, float] | None = None,
    maximize_min_trust: bool = False,
) -> tuple[Installation | None, ResolutionDiagnostic]:
    """Resolve root requirements against the graph under a capability policy.

    With maximize_min_trust, binary-search the highest trust threshold that
    still admits a secure installation (versions scoring below the
    threshold are banned), and return the installation found there.
    """
    cycle = detect_cycles(graph)
    if cycle is not None:
        return None, ResolutionDiagnostic(verdict="cycle", cycle_path=cycle)

    encoding = encode(graph, roots, allowed)
    model = solve(encoding.cnf.num_vars, encoding.cnf.clauses)
    if model is None:
        return None, ResolutionDiagnostic(verdict="unsat", core=_unsat_core(encoding))

    if not (maximize_min_trust and trust_scores is not None):
        installation = _installation_from_model(encoding, graph, roots, model)
        return installation, ResolutionDiagnostic(verdict="sat")

    thresholds = sorted({trust_scores.get(node, 0.0) for node in graph.nodes()})
    best_model = model
    best_tau = None
    lo, hi = 0, len(thresholds) - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        tau = thresholds[mid]
        banned = [
            [-var]
            for node, var in encoding.var_of.items()
            if trust_scores.get(node, 0.0) < tau
        ]
        trial = solve(encoding.cnf.num_vars, encoding.cnf.clauses + banned)
        if trial is not None:
            best_model, best_tau = trial, tau
            lo = mid + 1
        else:
            hi = mid - 1
    installation = _installation_from_model(encoding, graph, roots, best_model)
    return installation, ResolutionDiagnostic(verdict="sat", trust_threshold=best_tau)


def verify_installation(
    graph: DependencyGraph,
    installation: Installation,
    allowed: CapabilitySet,
) -> bool:
    """Direct check of the three security conditions.

    Completeness: every dependency of an installed node is satisfied by an
    installed version. Consistency: no conflict edge matches an installed
    version. Capability safety: every installed node fits the policy.
    """
    by_name: dict[str, list[SemVer]] = {}
    for name, ver in installation:
        by_name.setdefault(name, []).append(ver)
        if name not in graph.versions or ver not in graph.versions[name]:
            return False
    if any(len(vers) > 1 for vers in by_name.values()):
        return False
    chosen = {name: vers[0] for name, vers in by_name.items()}

    for node in installation:
        for target, constraint in graph.deps_of(node):
            w = chosen.get(target)
            if w is None or not constraint.satisfied_by(w):
                return False
        for target, constraint in graph.conflicts_of(node):
            w = chosen.get(target)
            if w is not None and (target, w) != node and constraint.satisfied_by(w):
                return False
        if not graph.caps_of(node).is_subset_of(allowed):
            return False
    return True


def _shares_readable_resource(a: CapabilitySet, b: CapabilitySet) -> bool:
    from ..capability import RESOURCES, AccessLevel

    return any(
        a.level(r) >= AccessLevel.READ and b.level(r) >= AccessLevel.READ
        for r in RESOURCES
    )


def affected(
    graph: DependencyGraph,
    installation: Installation,
    vuln: set[NodeKey],
) -> list[tuple[str, SemVer, bool]]:
    """Transitively affected installed nodes, via reverse-dependency BFS.

    A dependent is flagged elevated when it shares a readable resource
    with some vulnerable node it can reach.
    """
    inst = set(installation)
    chosen = {name: ver for name, ver in inst}
    reverse: dict[NodeKey, set[NodeKey]] = {}
    for node in inst:
        for target, constraint in graph.deps_of(node):
            w = chosen.get(target)
            if w is not None and constraint.satisfied_by(w):
                reverse.setdefault((target, w), set()).add(node)

    reaches: dict[NodeKey, set[NodeKey]] = {}
    for bad in sorted(vuln):
        if bad not in inst:
            continue
        stack = [bad]
        seen = {bad}
        while stack:
            cur = stack.pop()
            for parent in reverse.get(cur, ()):
                if parent not in seen:
                    seen.add(parent)
                    stack.append(parent)
                    reaches.setdefault(parent, set()).add(bad)

    out: list[tuple[str, SemVer, bool]] = []
    for node in sorted(reaches):
        if node in vuln:
            continue
        elevated = any(
            _shares_readable_resource(graph.caps_of(node), graph.caps_of(bad))
            for bad in reaches[node]
        )
        out.append((node[0], node[1], elevated))
    return out


def random_graph(n: int, seed: int = 1234) -> DependencyGraph:
    """Seeded random DAG used by the scalability benchmark.

    Edges only point from lower to higher skill indices (acyclic), and
    every constraint on a target is satisfied by that target's highest
    version, so simultaneous installation of all skills stays feasible.
    """
    from ..bench.rng import DeterministicRng

    rng = DeterministicRng(seed)
    names = [f"skill-{i:04d}" for i in range(n)]
    versions: dict[str, tuple[SemVer, ...]] = {}
    for name in names:
        count = rng.randint(1, 6)
        vers: set[SemVer] = set()
        while len(vers) < count:
            vers.add(SemVer(rng.randint(0, 3), rng.randint(0, 9), rng.randint(0, 9)))
        versions[name] = tuple(sorted(vers))

    deps: dict[NodeKey, tuple[tuple[str, ConstraintExpr], ...]] = {}
    for i, name in enumerate(names[:-1]):
        for ver in versions[name]:
            if rng.randint(0, 99) < 55:
                continue
            edge_count = rng.randint(1, min(3, n - i - 1))
            targets = sorted({names[rng.randint(i + 1, n - 1)] for _ in range(edge_count)})
            edges = []
            for target in targets:
                anchor = versions[target][-1]
                op = ("*", ">=", "^", "~")[rng.randint(0, 3)]
                if op == "*":
                    text = "*"
                elif op == ">=":
                    pivot = versions[target][rng.randint(0, len(versions[target]) - 1)]
                    text = f">={pivot}"
                else:
                    text = f"{op}{anchor}"
                edges.append((target, ConstraintExpr.parse(text)))
            deps[(name, ver)] = tuple(edges)
    return DependencyGraph(versions=versions, deps=deps)


def scalability_bench(n: int, *, seed: int = 1234) -> float:
    """Resolve a seeded random n-skill graph; returns wall-clock milliseconds."""
    graph = random_graph(n, seed)
    roots = [(name, ConstraintExpr.any()) for name in graph.skills]
    start = time.perf_counter()
    installation, diagnostic = resolve(graph, roots, CapabilitySet.top())
    elapsed = (time.perf_counter() - start) * 1000.0
    if diagnostic.verdict != "sat" or installation is None:
        raise RuntimeError(f"benchmark graph unexpectedly {diagnostic.verdict}")
    return elapsed
