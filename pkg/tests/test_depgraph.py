"""Graph construction, the CNF encoding, the solver, and resolution."""

import itertools
import random

import pytest

from skillaudit.capability import AccessLevel, CapabilitySet
from skillaudit.depgraph import (
    DependencyGraph,
    affected,
    detect_cycles,
    encode,
    resolve,
    solve,
    verify_installation,
)
from skillaudit.depgraph.resolve import random_graph
from skillaudit.skillmodel import parse_file
from skillaudit.versions import ConstraintExpr, SemVer


def v(text):
    return SemVer.parse(text)


def c(text):
    return ConstraintExpr.parse(text)


ANY = ConstraintExpr.any()


def graph_of(versions, deps=None, conflicts=None, caps=None):
    return DependencyGraph(
        versions={k: tuple(v(x) for x in vs) for k, vs in versions.items()},
        deps={(n, v(ver)): tuple((t, c(cc)) for t, cc in edges)
              for (n, ver), edges in (deps or {}).items()},
        conflicts={(n, v(ver)): tuple((t, c(cc)) for t, cc in edges)
                   for (n, ver), edges in (conflicts or {}).items()},
        caps={(n, v(ver)): cap for (n, ver), cap in (caps or {}).items()},
    )


class TestGraph:
    def test_unknown_dependency_target_rejected(self):
        with pytest.raises(ValueError):
            graph_of({"a": ["1.0.0"]}, deps={("a", "1.0.0"): [("ghost", "*")]})

    def test_empty_version_set_rejected(self):
        with pytest.raises(ValueError):
            DependencyGraph(versions={"a": ()})

    def test_from_skills_drops_unknown_targets_with_diagnostic(self, lockdemo_dir):
        skills = []
        for path in sorted(lockdemo_dir.iterdir()):
            skills.extend(parse_file(path, root=lockdemo_dir))
        graph, diags = DependencyGraph.from_skills(skills)
        assert set(graph.skills) == {"api-client", "file-manager", "json-formatter"}
        assert diags == []
        assert graph.deps_of(("json-formatter", v("1.2.0")))

    def test_from_skills_reports_dangling_edge(self, make_skill):
        skill = make_skill(name="lonely", dependencies=(("ghost", ANY),))
        graph, diags = DependencyGraph.from_skills([skill])
        assert graph.deps_of(("lonely", v("1.0.0"))) == ()
        assert len(diags) == 1 and "ghost" in diags[0].message

    def test_extra_records_add_versions_and_conflicts(self, make_skill, tmp_path):
        import json

        from skillaudit.capability import AccessLevel, ResourceType
        from skillaudit.depgraph import load_graph_manifest

        manifest = tmp_path / "graph.json"
        manifest.write_text(json.dumps([
            {"name": "helper", "version": "2.0.0",
             "deps": {"base": ">=1.0.0"},
             "capabilities": ["net_access"]},
            {"name": "base", "version": "1.1.0",
             "conflicts": {"helper": "^2.0.0"}},
        ]), encoding="utf-8")
        base = make_skill(name="base")  # 1.0.0 on disk
        graph, diags = DependencyGraph.from_skills([base], load_graph_manifest(manifest))
        assert diags == []
        assert graph.versions["helper"] == (v("2.0.0"),)
        assert set(graph.versions["base"]) == {v("1.0.0"), v("1.1.0")}
        assert graph.deps_of(("helper", v("2.0.0")))[0][0] == "base"
        assert graph.conflicts_of(("base", v("1.1.0")))[0][0] == "helper"
        caps = graph.caps_of(("helper", v("2.0.0")))
        assert caps.level(ResourceType.NETWORK) is AccessLevel.READ

    def test_graph_manifest_rejects_bad_shape(self, tmp_path):
        import json

        from skillaudit.depgraph import load_graph_manifest

        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"name": "x"}), encoding="utf-8")
        with pytest.raises(ValueError):
            load_graph_manifest(bad)
        bad.write_text(json.dumps([{"name": "x"}]), encoding="utf-8")
        with pytest.raises(ValueError):
            load_graph_manifest(bad)


class TestCycles:
    def test_two_cycle(self):
        g = graph_of(
            {"a": ["1.0.0"], "b": ["1.0.0"]},
            deps={("a", "1.0.0"): [("b", "*")], ("b", "1.0.0"): [("a", "*")]},
        )
        cycle = detect_cycles(g)
        assert cycle is not None and set(cycle) == {"a", "b"}

    def test_dag_has_no_cycle(self):
        g = graph_of(
            {"a": ["1.0.0"], "b": ["1.0.0"], "c": ["1.0.0"]},
            deps={("a", "1.0.0"): [("b", "*")], ("b", "1.0.0"): [("c", "*")]},
        )
        assert detect_cycles(g) is None

    def test_empty_graph(self):
        assert detect_cycles(graph_of({})) is None

    def test_resolve_reports_cycle(self):
        g = graph_of(
            {"a": ["1.0.0"], "b": ["1.0.0"]},
            deps={("a", "1.0.0"): [("b", "*")], ("b", "1.0.0"): [("a", "*")]},
        )
        installation, diag = resolve(g, [("a", ANY)], CapabilitySet.top())
        assert installation is None and diag.verdict == "cycle"


class TestEncoding:
    def test_single_skill_two_versions(self):
        g = graph_of({"a": ["1.0.0", "2.0.0"]})
        enc = encode(g, [("a", ANY)], CapabilitySet.top())
        # variable 1 is the higher version under descending numbering
        assert enc.var_of[("a", v("2.0.0"))] == 1
        assert enc.var_of[("a", v("1.0.0"))] == 2
        clauses = {tuple(cl) for cl in enc.cnf.clauses}
        assert (-1, -2) in clauses  # at-most-one pair
        assert (1, 2) in clauses  # root disjunction, high version first

    def test_unsatisfiable_dependency_degenerates_to_unit_ban(self):
        g = graph_of(
            {"a": ["1.0.0"], "b": ["2.0.0"]},
            deps={("a", "1.0.0"): [("b", "^1.0.0")]},
        )
        enc = encode(g, [], CapabilitySet.top())
        x_a = enc.var_of[("a", v("1.0.0"))]
        assert [-x_a] in enc.cnf.clauses

    def test_capability_bound_unit_ban(self):
        g = graph_of(
            {"a": ["1.0.0"]},
            caps={("a", "1.0.0"): CapabilitySet.of(shell=AccessLevel.WRITE)},
        )
        enc = encode(g, [], CapabilitySet.of(network=AccessLevel.READ))
        x_a = enc.var_of[("a", v("1.0.0"))]
        assert [-x_a] in enc.cnf.clauses

    def test_variable_numbering_lexicographic_then_descending(self):
        g = graph_of({"b": ["1.0.0"], "a": ["1.0.0", "3.0.0", "2.0.0"]})
        enc = encode(g, [], CapabilitySet.top())
        assert enc.var_of[("a", v("3.0.0"))] == 1
        assert enc.var_of[("a", v("2.0.0"))] == 2
        assert enc.var_of[("a", v("1.0.0"))] == 3
        assert enc.var_of[("b", v("1.0.0"))] == 4


class TestSolver:
    def test_empty_formula_sat(self):
        # Satisfiable with no variables to assign (index 0 is a placeholder).
        model = solve(0, [])
        assert model is not None and len(model) == 1

    def test_unit_conflict_unsat(self):
        assert solve(1, [[1], [-1]]) is None

    def test_empty_clause_unsat(self):
        assert solve(1, [[]]) is None

    def test_simple_chain(self):
        model = solve(3, [[1, 2], [-1, 3], [-2, -3]])
        assert model is not None
        for clause in [[1, 2], [-1, 3], [-2, -3]]:
            assert any(model[abs(l)] == (l > 0) for l in clause)

    def test_deterministic(self):
        clauses = [[1, 2], [-1, 3], [2, -3], [-2, 3]]
        assert solve(3, clauses) == solve(3, clauses)

    def test_true_first_preference(self):
        model = solve(2, [[1, 2]])
        assert model is not None and model[1] is True

    def test_random_cnf_matches_truth_table(self):
        # Raw-CNF cross-check: satisfiability must agree with exhaustive
        # truth-table evaluation, and returned models must satisfy every
        # clause.
        rng = random.Random(1337)
        for _ in range(300):
            num_vars = rng.randint(1, 8)
            clauses = []
            for _ in range(rng.randint(1, 20)):
                width = rng.randint(1, 3)
                clause = [
                    rng.choice([1, -1]) * rng.randint(1, num_vars)
                    for _ in range(width)
                ]
                clauses.append(clause)
            model = solve(num_vars, clauses)
            expected = any(
                all(
                    any(
                        (lit > 0) == bool(bits & (1 << (abs(lit) - 1)))
                        for lit in clause
                    )
                    for clause in clauses
                )
                for bits in range(1 << num_vars)
            )
            assert (model is not None) == expected
            if model is not None:
                for clause in clauses:
                    assert any(model[abs(lit)] == (lit > 0) for lit in clause)

    def test_amo_block_propagation(self):
        # pairwise at-most-one over ten variables plus a forcing unit
        clauses = [[-i, -j] for i in range(1, 11) for j in range(i + 1, 11)]
        clauses.append([5])
        model = solve(10, clauses)
        assert model is not None and model[5] is True
        assert sum(model[1:]) == 1


def brute_force_exists(graph, roots, allowed):
    """Exhaustive enumeration over all install-or-skip version selections."""
    names = list(graph.skills)
    options = [[None] + list(graph.versions[n]) for n in names]
    for combo in itertools.product(*options):
        selection = {n: ver for n, ver in zip(names, combo) if ver is not None}
        if _selection_ok(graph, roots, allowed, selection):
            return True
    return False


def _selection_ok(graph, roots, allowed, selection):
    for name, constraint in roots:
        ver = selection.get(name)
        if ver is None or not constraint.satisfied_by(ver):
            return False
    for name, ver in selection.items():
        node = (name, ver)
        for target, constraint in graph.deps_of(node):
            got = selection.get(target)
            if got is None or not constraint.satisfied_by(got):
                return False
        for target, constraint in graph.conflicts_of(node):
            got = selection.get(target)
            if got is not None and (target, got) != node and constraint.satisfied_by(got):
                return False
        if not graph.caps_of(node).is_subset_of(allowed):
            return False
    return True


def make_random_instance(rng):
    n = rng.randint(2, 6)
    names = [f"s{i}" for i in range(n)]
    versions = {}
    for name in names:
        count = rng.randint(1, 4)
        vers = set()
        while len(vers) < count:
            vers.add(SemVer(rng.randint(0, 2), rng.randint(0, 3), rng.randint(0, 3)))
        versions[name] = tuple(sorted(vers))

    def random_constraint(target):
        pool = versions[target]
        pivot = rng.choice(pool)
        op = rng.choice(["*", ">=", "<=", "==", "^", "~", "!="])
        return ANY if op == "*" else c(f"{op}{pivot}")

    deps = {}
    conflicts = {}
    caps = {}
    resources = ["network", "shell", "filesystem", "environment"]
    for i, name in enumerate(names):
        for ver in versions[name]:
            node = (name, ver)
            if i + 1 < n and rng.random() < 0.6:
                targets = rng.sample(names[i + 1:], k=min(rng.randint(1, 2), n - i - 1))
                deps[node] = tuple((t, random_constraint(t)) for t in targets)
            if rng.random() < 0.25:
                other = rng.choice([m for m in names if m != name])
                conflicts[node] = ((other, random_constraint(other)),)
            if rng.random() < 0.4:
                caps[node] = CapabilitySet.of(
                    **{rng.choice(resources): rng.choice(
                        [AccessLevel.READ, AccessLevel.WRITE, AccessLevel.ADMIN]
                    )}
                )
    graph = DependencyGraph(versions=versions, deps=deps, conflicts=conflicts, caps=caps)
    roots = [
        (name, random_constraint(name))
        for name in rng.sample(names, k=rng.randint(1, n))
    ]
    allowed = CapabilitySet.of(
        network=AccessLevel.WRITE, shell=AccessLevel.WRITE,
        filesystem=AccessLevel.WRITE, environment=AccessLevel.WRITE,
    ) if rng.random() < 0.5 else CapabilitySet.top()
    return graph, roots, allowed


class TestResolution:
    def test_three_skill_scenario(self, lockdemo_dir):
        skills = []
        for path in sorted(lockdemo_dir.iterdir()):
            skills.extend(parse_file(path, root=lockdemo_dir))
        graph, _ = DependencyGraph.from_skills(skills)
        roots = [(name, ANY) for name in graph.skills]
        installation, diag = resolve(graph, roots, CapabilitySet.top())
        assert diag.verdict == "sat"
        assert installation == {
            ("api-client", v("3.0.1")),
            ("file-manager", v("2.1.0")),
            ("json-formatter", v("1.2.0")),
        }

    def test_highest_version_preferred(self):
        g = graph_of({"a": ["1.0.0", "1.5.0", "2.0.0"]})
        installation, diag = resolve(g, [("a", c("^1.0.0"))], CapabilitySet.top())
        assert diag.verdict == "sat"
        assert installation == {("a", v("1.5.0"))}

    def test_unsat_core_mentions_failing_dependency(self):
        g = graph_of(
            {"a": ["1.0.0"], "b": ["2.0.0"]},
            deps={("a", "1.0.0"): [("b", "^1.0.0")]},
        )
        installation, diag = resolve(g, [("a", ANY)], CapabilitySet.top())
        assert installation is None and diag.verdict == "unsat"
        assert any("a@1.0.0" in line and "'b'" in line for line in diag.core)

    def test_roots_restrict_installation_to_reachable_closure(self):
        g = graph_of(
            {"a": ["1.0.0"], "b": ["1.0.0"], "stray": ["1.0.0"]},
            deps={("a", "1.0.0"): [("b", "*")]},
        )
        installation, diag = resolve(g, [("a", ANY)], CapabilitySet.top())
        assert diag.verdict == "sat"
        assert installation == {("a", v("1.0.0")), ("b", v("1.0.0"))}

    def test_capability_bound_forces_lower_version(self):
        g = graph_of(
            {"a": ["1.0.0", "2.0.0"]},
            caps={
                ("a", "2.0.0"): CapabilitySet.of(shell=AccessLevel.WRITE),
                ("a", "1.0.0"): CapabilitySet.of(network=AccessLevel.READ),
            },
        )
        allowed = CapabilitySet.of(network=AccessLevel.WRITE)
        installation, diag = resolve(g, [("a", ANY)], allowed)
        assert diag.verdict == "sat"
        assert installation == {("a", v("1.0.0"))}

    def test_resolve_deterministic(self):
        g = random_graph(40, seed=99)
        roots = [(name, ANY) for name in g.skills]
        first = resolve(g, roots, CapabilitySet.top())
        second = resolve(g, roots, CapabilitySet.top())
        assert first[0] == second[0]

    def test_same_seed_same_graph_and_installation(self):
        a = random_graph(50, seed=7)
        b = random_graph(50, seed=7)
        assert a.versions == b.versions and a.deps == b.deps
        roots = [(name, ANY) for name in a.skills]
        inst_a, _ = resolve(a, roots, CapabilitySet.top())
        inst_b, _ = resolve(b, roots, CapabilitySet.top())
        assert inst_a == inst_b

    def test_verify_installation_rejects_missing_dependency(self):
        g = graph_of(
            {"a": ["1.0.0"], "b": ["1.0.0"]},
            deps={("a", "1.0.0"): [("b", "*")]},
        )
        assert not verify_installation(g, frozenset({("a", v("1.0.0"))}), CapabilitySet.top())

    def test_verify_installation_rejects_capability_breach(self):
        g = graph_of(
            {"a": ["1.0.0"]},
            caps={("a", "1.0.0"): CapabilitySet.of(shell=AccessLevel.WRITE)},
        )
        assert not verify_installation(
            g, frozenset({("a", v("1.0.0"))}), CapabilitySet.of(network=AccessLevel.READ)
        )

    def test_oracle_agreement_sample(self):
        rng = random.Random(2024)
        for _ in range(60):
            graph, roots, allowed = make_random_instance(rng)
            installation, diag = resolve(graph, roots, allowed)
            expected = brute_force_exists(graph, roots, allowed)
            assert (diag.verdict == "sat") == expected
            if diag.verdict == "sat":
                assert verify_installation(graph, installation, allowed)

    def test_trust_threshold_mode_prefers_trusted_versions(self):
        g = graph_of({"a": ["1.0.0", "2.0.0"]})
        trust = {("a", v("2.0.0")): 0.2, ("a", v("1.0.0")): 0.9}
        installation, diag = resolve(
            g, [("a", ANY)], CapabilitySet.top(),
            trust_scores=trust, maximize_min_trust=True,
        )
        assert diag.verdict == "sat"
        assert installation == {("a", v("1.0.0"))}
        assert diag.trust_threshold == 0.9


class TestAffected:
    def test_chain(self):
        g = graph_of(
            {"a": ["1.0.0"], "b": ["1.0.0"], "c": ["1.0.0"]},
            deps={("a", "1.0.0"): [("b", "*")], ("b", "1.0.0"): [("c", "*")]},
        )
        installation = frozenset(
            {("a", v("1.0.0")), ("b", v("1.0.0")), ("c", v("1.0.0"))}
        )
        hits = affected(g, installation, {("c", v("1.0.0"))})
        assert {(n, str(ver)) for n, ver, _ in hits} == {("a", "1.0.0"), ("b", "1.0.0")}

    def test_empty_vulnerability_set(self):
        g = graph_of({"a": ["1.0.0"]})
        assert affected(g, frozenset({("a", v("1.0.0"))}), set()) == []

    def test_diamond_elevated_once(self):
        shared = CapabilitySet.of(network=AccessLevel.READ)
        g = graph_of(
            {"a": ["1.0.0"], "b": ["1.0.0"], "c": ["1.0.0"], "d": ["1.0.0"]},
            deps={
                ("a", "1.0.0"): [("b", "*"), ("c", "*")],
                ("b", "1.0.0"): [("d", "*")],
                ("c", "1.0.0"): [("d", "*")],
            },
            caps={("a", "1.0.0"): shared, ("d", "1.0.0"): shared},
        )
        installation = frozenset(
            {(n, v("1.0.0")) for n in ("a", "b", "c", "d")}
        )
        hits = affected(g, installation, {("d", v("1.0.0"))})
        entries = {n: elevated for n, _ver, elevated in hits}
        # hand-walked reverse reachability: b, c, a each appear exactly once
        assert set(entries) == {"a", "b", "c"}
        assert entries["a"] is True  # shares the network resource with d
        assert entries["b"] is False and entries["c"] is False

    def test_monotone_in_vulnerability_set(self):
        g = random_graph(12, seed=5)
        roots = [(name, ANY) for name in g.skills]
        installation, _ = resolve(g, roots, CapabilitySet.top())
        nodes = sorted(installation)
        small = {nodes[0]}
        large = {nodes[0], nodes[-1]}
        small_hits = {(n, str(ver)) for n, ver, _ in affected(g, installation, small)}
        large_hits = {(n, str(ver)) for n, ver, _ in affected(g, installation, large)}
        assert small_hits <= large_hits | {(n, str(ver)) for n, ver in large}
