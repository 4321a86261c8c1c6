"""Command-line interface.

Five commands: scan, verify, lock, trust, sbom. A sixth (bench) drives
the benchmark generator and evaluation harness.

Exit codes: 0 means no finding at or above the threshold, 1 means
findings at or above the threshold (or resolution failure), 2 means a
usage, IO, or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import TOOL_NAME, __version__
from .analyzer import AnalysisReport, analyze, catalog as default_patterns
from .artifacts import (
    LockRefused,
    build_asbom,
    build_lockfile,
    canonical_json,
    format_timestamp,
)
from .capability import CAPABILITY_ALIASES, CapabilitySet, parse_capability_strings
from .depgraph import DependencyGraph, affected, load_graph_manifest, resolve
from .patterns import Severity, ThreatPattern, load_pattern_file
from .skillmodel import Skill, SkillParseError, discover_skills, parse_file
from .trust import (
    DEFAULT_DECAY_RATE,
    DEFAULT_WEIGHTS,
    CycleError,
    TrustWeights,
    decay,
    effective,
    intrinsic,
    level,
    signals_from_report,
)
from .versions import ConstraintExpr

_SEVERITY_CHOICES = ("LOW", "MEDIUM", "HIGH", "CRITICAL")

# JSON file with default values for patterns/signals/weights/lambda,
# applied wherever the corresponding flag was not given.
CONFIG_ENV_VAR = "SKILLAUDIT_CONFIG"


def _err(message: str) -> None:
    print(f"{TOOL_NAME}: {message}", file=sys.stderr)


def _apply_env_config(args: argparse.Namespace) -> None:
    path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return
    config = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(config, dict):
        raise ValueError(f"{CONFIG_ENV_VAR} file must contain a JSON object")
    for key, attr in (("patterns", "patterns"), ("signals", "signals"),
                      ("weights", "weights")):
        if getattr(args, attr, None) is None and key in config:
            setattr(args, attr, str(config[key]))
    if getattr(args, "decay_rate", None) is None and "lambda" in config:
        args.decay_rate = float(config["lambda"])


def _parse_timestamp(text: str) -> datetime:
    cleaned = text.strip()
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1] + "+00:00"
    moment = datetime.fromisoformat(cleaned)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment


def _clock(args: argparse.Namespace) -> datetime:
    stamp = getattr(args, "timestamp", None)
    if stamp:
        return _parse_timestamp(stamp)
    return datetime.now(timezone.utc)


def _load_catalog(args: argparse.Namespace) -> list[ThreatPattern]:
    patterns = list(default_patterns())
    path = getattr(args, "patterns", None)
    if path:
        patterns.extend(load_pattern_file(path))
    return patterns


def _load_signals(args: argparse.Namespace) -> dict[str, dict]:
    path = getattr(args, "signals", None)
    if not path:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("signals file must map skill names to signal records")
    return data


def _parse_weights(text: str | None) -> TrustWeights:
    if not text:
        return DEFAULT_WEIGHTS
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError("weights must be four comma-separated numbers")
    return TrustWeights(*parts)


def _parse_allowed(text: str | None) -> CapabilitySet:
    if not text:
        return CapabilitySet.top()
    names = [p for p in text.split(",") if p.strip()]
    caps, unknown = parse_capability_strings(names)
    if unknown:
        known = ", ".join(sorted(CAPABILITY_ALIASES))
        raise ValueError(f"unknown capability strings {unknown}; known: {known}")
    return caps


def _rate(args: argparse.Namespace) -> float:
    rate = getattr(args, "decay_rate", None)
    return rate if rate is not None else DEFAULT_DECAY_RATE


def _decayed_days(signal_record: dict | None, now: datetime) -> float:
    if not signal_record:
        return 0.0
    stamp = signal_record.get("last_updated")
    if not stamp:
        return 0.0
    last = _parse_timestamp(str(stamp))
    delta = (now - last).total_seconds() / 86400.0
    return max(0.0, delta)


def _trust_scores(
    skills: list[Skill],
    reports: dict[str, AnalysisReport],
    graph: DependencyGraph,
    signals_by_name: dict[str, dict],
    weights: TrustWeights,
    rate: float,
    now: datetime,
) -> dict[str, float]:
    """Effective (and decayed) trust per skill name.

    When several manifests share a name the lowest intrinsic wins, which
    keeps the weakest-link reading of duplicate declarations.
    """
    intrinsics: dict[str, float] = {}
    for skill in skills:
        report = reports[skill.id]
        sig = signals_from_report(report, signals_by_name.get(skill.name))
        score = intrinsic(sig, weights)
        current = intrinsics.get(skill.name)
        intrinsics[skill.name] = score if current is None else min(current, score)

    adjacency = graph.name_projection()
    scores: dict[str, float] = {}
    for name in sorted(intrinsics):
        try:
            eff = effective(adjacency, intrinsics, name)
        except (CycleError, KeyError):
            eff = intrinsics[name]
        days = _decayed_days(signals_by_name.get(name), now)
        scores[name] = decay(eff, rate, days) if days > 0 else eff
    return scores


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def _cmd_scan(args: argparse.Namespace) -> int:
    now = _clock(args)
    try:
        discovery = discover_skills(args.path)
        catalog = _load_catalog(args)
        signals = _load_signals(args)
        weights = _parse_weights(args.weights)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return 2

    skills = discovery.skills
    reports = {s.id: analyze(s, catalog, now=now) for s in skills}
    graph, graph_diags = DependencyGraph.from_skills(skills)
    scores = _trust_scores(
        skills, reports, graph, signals, weights, _rate(args), now
    )

    threshold = Severity.parse(args.fail_on)
    gate_hit = any(r.max_severity >= threshold for r in reports.values())

    if args.format == "json":
        doc = {
            "tool": f"{TOOL_NAME} {__version__}",
            "root": str(args.path),
            "generated_at": format_timestamp(now),
            "skills": [
                {
                    **reports[s.id].to_dict(),
                    "version": str(s.version),
                    "format": s.format.value,
                    "trust": {
                        "score": round(scores.get(s.name, 0.0), 4),
                        "level": level(scores.get(s.name, 0.0)).code,
                    },
                }
                for s in skills
            ],
            "diagnostics": [
                {"path": d.path, "message": d.message} for d in discovery.diagnostics
            ] + [
                {"path": d.subject, "message": d.message} for d in graph_diags
            ],
            "summary": _summary(reports),
        }
        sys.stdout.write(canonical_json(doc).decode("utf-8"))
        return 1 if gate_hit else 0

    _print_text_report(skills, reports, scores, discovery.diagnostics, graph_diags)
    return 1 if gate_hit else 0


def _summary(reports: dict[str, AnalysisReport]) -> dict:
    statuses = {"clean": 0, "warning": 0, "critical": 0}
    for report in reports.values():
        statuses[report.status.value] += 1
    max_sev = max(
        (r.max_severity for r in reports.values()), default=Severity.NONE
    )
    return {
        "total": len(reports),
        "clean": statuses["clean"],
        "warning": statuses["warning"],
        "critical": statuses["critical"],
        "max_severity": max_sev.name,
    }


def _print_text_report(skills, reports, scores, diagnostics, graph_diags) -> None:
    rows = []
    for skill in skills:
        report = reports[skill.id]
        for f in report.findings:
            rows.append((f.severity, skill.source_path, f.line,
                         f"[{f.severity.name}] {skill.source_path}:{f.line} "
                         f"{f.pattern_id}: {f.message}"))
        for f in report.flow_findings:
            line = f.path[0][0].line if f.path else 1
            rows.append((f.severity, skill.source_path, line,
                         f"[{f.severity.name}] {skill.source_path}:{line} "
                         f"flow: {f.source} -> {f.sink}"))
    rows.sort(key=lambda r: (-r[0], r[1], r[2]))
    for _sev, _path, _line, text in rows:
        print(text)
    if rows:
        print()
    for skill in skills:
        report = reports[skill.id]
        score = scores.get(skill.name, 0.0)
        extras = ""
        if report.capability_violations:
            listed = ", ".join(sorted(str(v) for v in report.capability_violations))
            extras = f" violations: {listed}"
        print(
            f"{skill.source_path}: {report.status.value} "
            f"(max {report.max_severity.name}, trust {score:.2f}/{level(score).code})"
            f"{extras}"
        )
    for diag in diagnostics:
        print(f"note: {diag.path}: {diag.message}")
    for diag in graph_diags:
        print(f"note: {diag.subject}: {diag.message}")
    summary = _summary(reports)
    print(
        f"scanned {summary['total']} skills: {summary['clean']} clean, "
        f"{summary['warning']} warning, {summary['critical']} critical"
    )


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        skills = parse_file(args.skill)
    except (OSError, SkillParseError) as exc:
        _err(str(exc))
        return 2
    any_violation = False
    for skill in skills:
        report = analyze(skill, _load_catalog(args), now=_clock(args))
        print(f"skill: {skill.name} ({skill.format.value} {skill.version})")
        declared = ", ".join(str(c) for c in skill.declared_capabilities) or "(none)"
        inferred = ", ".join(str(c) for c in report.inferred) or "(none)"
        print(f"  declared: {declared}")
        print(f"  inferred: {inferred}")
        if report.capability_violations:
            any_violation = True
            for violation in sorted(str(v) for v in report.capability_violations):
                print(f"  violation: {violation}")
        else:
            print("  violations: (none)")
    return 1 if any_violation else 0


# ---------------------------------------------------------------------------
# lock
# ---------------------------------------------------------------------------

def _prepare_graph(args: argparse.Namespace, now: datetime):
    discovery = discover_skills(args.path)
    skills = discovery.skills
    catalog = _load_catalog(args)
    reports = {s.id: analyze(s, catalog, now=now) for s in skills}
    extra = load_graph_manifest(args.graph_manifest) if getattr(args, "graph_manifest", None) else None
    graph, graph_diags = DependencyGraph.from_skills(skills, extra)
    signals = _load_signals(args)
    weights = _parse_weights(getattr(args, "weights", None))
    scores = _trust_scores(
        skills, reports, graph, signals, weights, _rate(args), now,
    )
    return discovery, skills, reports, graph, graph_diags, scores


def _installed_maps(installation, skills, reports):
    """Map the resolved installation back to discovered manifests.

    Nodes that exist only as graph-manifest metadata have no local bytes
    to hash; they come back in `missing` and block artifact generation.
    """
    by_node = {(s.name, s.version): s for s in skills}
    skills_by_name: dict[str, Skill] = {}
    reports_by_name: dict[str, AnalysisReport] = {}
    missing: list[str] = []
    for name, version in sorted(installation):
        skill = by_node.get((name, version))
        if skill is None:
            missing.append(f"{name}@{version}")
            continue
        skills_by_name[name] = skill
        reports_by_name[name] = reports[skill.id]
    return skills_by_name, reports_by_name, missing


def _cmd_lock(args: argparse.Namespace) -> int:
    now = _clock(args)
    try:
        _discovery, skills, reports, graph, _gd, scores = _prepare_graph(args, now)
        allowed = _parse_allowed(args.allow)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return 2

    roots = [(name, ConstraintExpr.any()) for name in graph.skills]
    installation, diagnostic = resolve(graph, roots, allowed)
    if diagnostic.verdict == "cycle":
        _err(f"dependency cycle: {' -> '.join(diagnostic.cycle_path)}")
        return 1
    if diagnostic.verdict == "unsat" or installation is None:
        _err("no secure installation exists; unsatisfiable core:")
        for line in diagnostic.core:
            print(f"  - {line}", file=sys.stderr)
        return 1

    skills_by_name, reports_by_name, missing = _installed_maps(installation, skills, reports)
    if missing:
        _err(
            "resolved versions have no local manifest to hash: "
            + ", ".join(missing)
        )
        return 1
    try:
        lock = build_lockfile(
            installation, skills_by_name, reports_by_name, scores,
            now=now, force=args.force,
        )
    except LockRefused as exc:
        _err(str(exc))
        return 1
    out_path = Path(args.output)
    try:
        out_path.write_bytes(canonical_json(lock))
    except OSError as exc:
        _err(str(exc))
        return 2
    print(f"wrote {out_path} ({len(lock['skills'])} skills)")
    return 0


# ---------------------------------------------------------------------------
# trust
# ---------------------------------------------------------------------------

def _cmd_trust(args: argparse.Namespace) -> int:
    now = _clock(args)
    try:
        skills = parse_file(args.skill)
        signals_by_name = _load_signals(args)
        weights = _parse_weights(args.weights)
    except (OSError, SkillParseError, ValueError) as exc:
        _err(str(exc))
        return 2

    adjacency: dict[str, set[str]] = {}
    intrinsics: dict[str, float] = {}
    if args.graph:
        try:
            discovery = discover_skills(args.graph)
        except OSError as exc:
            _err(str(exc))
            return 2
        graph, _diags = DependencyGraph.from_skills(discovery.skills)
        adjacency = graph.name_projection()
        for other in discovery.skills:
            rep = analyze(other, now=now)
            sig = signals_from_report(rep, signals_by_name.get(other.name))
            score = intrinsic(sig, weights)
            prev = intrinsics.get(other.name)
            intrinsics[other.name] = score if prev is None else min(prev, score)

    for skill in skills:
        report = analyze(skill, now=now)
        sig = signals_from_report(report, signals_by_name.get(skill.name))
        own = intrinsic(sig, weights)
        intrinsics.setdefault(skill.name, own)
        try:
            eff = effective(adjacency, intrinsics, skill.name) if adjacency else own
        except (CycleError, KeyError):
            eff = own
        reference = now
        if args.at:
            reference = _parse_timestamp(args.at)
        days = _decayed_days(signals_by_name.get(skill.name), reference)
        final = decay(eff, _rate(args), days) if days > 0 else eff
        print(f"skill: {skill.name}")
        print(
            "  signals: provenance={:.2f} behavioral={:.2f} community={:.2f} historical={:.2f}".format(
                sig.provenance, sig.behavioral, sig.community, sig.historical
            )
        )
        print(f"  intrinsic: {own:.4f}")
        print(f"  effective: {eff:.4f}")
        if days > 0:
            print(f"  decayed: {final:.4f} (after {days:.1f} days)")
        print(f"  level: {level(final).code} ({level(final).label})")
    return 0


# ---------------------------------------------------------------------------
# sbom
# ---------------------------------------------------------------------------

def _cmd_sbom(args: argparse.Namespace) -> int:
    now = _clock(args)
    try:
        _discovery, skills, reports, graph, _gd, scores = _prepare_graph(args, now)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return 2

    roots = [(name, ConstraintExpr.any()) for name in graph.skills]
    installation, diagnostic = resolve(graph, roots, CapabilitySet.top())
    if installation is None:
        _err(f"resolution failed ({diagnostic.verdict}); cannot build inventory")
        return 1
    skills_by_name, reports_by_name, missing = _installed_maps(installation, skills, reports)
    if missing:
        _err(
            "resolved versions have no local manifest to inventory: "
            + ", ".join(missing)
        )
        return 1
    vulnerable = {
        (name, ver)
        for name, ver in installation
        if name in reports_by_name and reports_by_name[name].status.value == "critical"
    }
    affected_nodes = affected(graph, installation, vulnerable)
    doc = build_asbom(
        installation, skills_by_name, reports_by_name, scores,
        vulnerable=vulnerable, affected_nodes=affected_nodes, now=now,
    )
    data = canonical_json(doc)
    if args.output:
        try:
            Path(args.output).write_bytes(data)
        except OSError as exc:
            _err(str(exc))
            return 2
        print(f"wrote {args.output} ({len(doc['components'])} components)")
    else:
        sys.stdout.write(data.decode("utf-8"))
    return 0


# ---------------------------------------------------------------------------
# bench (undocumented helper for the evaluation workflow)
# ---------------------------------------------------------------------------

def _cmd_bench(args: argparse.Namespace) -> int:
    from .bench import BenchSpec, ablate, evaluate, generate
    from .depgraph import scalability_bench

    if args.bench_command == "generate":
        spec = BenchSpec(seed=args.seed)
        manifest = generate(spec, args.out)
        print(f"generated {manifest['total']} skills under {args.out}")
        return 0
    if args.bench_command == "evaluate":
        result = evaluate(args.corpus, args.manifest)
        sys.stdout.write(canonical_json(result.to_dict()).decode("utf-8"))
        return 0
    if args.bench_command == "ablate":
        result = ablate(args.corpus, args.manifest)
        sys.stdout.write(canonical_json(result).decode("utf-8"))
        return 0
    if args.bench_command == "scale":
        sizes = [int(s) for s in args.sizes.split(",")]
        timings = {str(n): round(scalability_bench(n), 3) for n in sizes}
        sys.stdout.write(canonical_json({"milliseconds": timings}).decode("utf-8"))
        return 0
    _err(f"unknown bench command {args.bench_command!r}")
    return 2


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common_analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--patterns", help="JSON file of extra threat patterns")
    parser.add_argument("--timestamp", help="inject a fixed ISO-8601 clock")


def _add_trust_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--signals", help="JSON sidecar of external trust signals")
    parser.add_argument("--weights", help="four comma-separated trust weights summing to 1")
    parser.add_argument(
        "--lambda", dest="decay_rate", type=float, default=None,
        help=f"trust decay rate per day (default {DEFAULT_DECAY_RATE})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Audit agent skills: capability confinement, dependency "
                    "resolution under security bounds, trust scoring, and "
                    "deterministic lockfiles/SBOMs.",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    # bench stays callable but out of the documented command surface
    sub = parser.add_subparsers(
        dest="command", required=True, metavar="{scan,verify,lock,trust,sbom}"
    )

    scan = sub.add_parser("scan", help="discover and analyze every skill under a path")
    scan.add_argument("path")
    scan.add_argument("--format", choices=("text", "json"), default="text")
    scan.add_argument("--fail-on", choices=_SEVERITY_CHOICES, default="MEDIUM")
    _add_common_analysis_flags(scan)
    _add_trust_flags(scan)
    scan.set_defaults(func=_cmd_scan)

    verify = sub.add_parser("verify", help="check one skill's capability confinement")
    verify.add_argument("skill")
    _add_common_analysis_flags(verify)
    verify.set_defaults(func=_cmd_verify)

    lock = sub.add_parser("lock", help="resolve dependencies and write skill-lock.json")
    lock.add_argument("path")
    lock.add_argument("-o", "--output", default="skill-lock.json")
    lock.add_argument("--allow", help="comma-separated allowed capability strings (default: all)")
    lock.add_argument("--force", action="store_true", help="lock even critical-status skills")
    lock.add_argument("--graph-manifest", help="JSON records adding versions/conflicts to the graph")
    _add_common_analysis_flags(lock)
    _add_trust_flags(lock)
    lock.set_defaults(func=_cmd_lock)

    trust = sub.add_parser("trust", help="compute trust scores for one skill")
    trust.add_argument("skill")
    trust.add_argument("--graph", help="directory scanned for dependency context")
    trust.add_argument("--at", help="evaluate decay at this ISO-8601 instant")
    _add_common_analysis_flags(trust)
    _add_trust_flags(trust)
    trust.set_defaults(func=_cmd_trust)

    sbom = sub.add_parser("sbom", help="emit a skill inventory document")
    sbom.add_argument("path")
    sbom.add_argument("-o", "--output")
    sbom.add_argument("--graph-manifest", help="JSON records adding versions/conflicts to the graph")
    _add_common_analysis_flags(sbom)
    _add_trust_flags(sbom)
    sbom.set_defaults(func=_cmd_sbom)

    bench = sub.add_parser("bench")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    gen = bench_sub.add_parser("generate")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=42)
    ev = bench_sub.add_parser("evaluate")
    ev.add_argument("corpus")
    ev.add_argument("--manifest")
    ab = bench_sub.add_parser("ablate")
    ab.add_argument("corpus")
    ab.add_argument("--manifest")
    sc = bench_sub.add_parser("scale")
    sc.add_argument("--sizes", default="10,50,100,200,500,1000")
    bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_env_config(args)
    except (OSError, ValueError) as exc:
        _err(f"bad {CONFIG_ENV_VAR}: {exc}")
        return 2
    try:
        return args.func(args)
    except SkillParseError as exc:
        _err(str(exc))
        return 2
    except LockRefused as exc:
        _err(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
