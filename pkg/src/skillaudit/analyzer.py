"""Three-phase static analysis of parsed skills.

Phase 1 infers a capability set by joining transfer-function outputs over
every content field. Phase 2 matches the threat catalog and the
typosquat name heuristic. Phase 3 compares inferred against declared
capabilities. Flow tracing adds statement-level taint tracking inside
code blocks, from sensitive sources to network/process sinks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

from .capability import AccessLevel, CapabilitySet, Capability, ResourceType, violations as cap_violations
from .patterns import (
    AttackClass,
    Severity,
    ThreatPattern,
    TYPOSQUAT_PATTERN_ID,
    default_catalog,
    find_name_lookalike,
)
from .skillmodel import ContentField, FieldKind, Skill

_DEFAULT_CATALOG: list[ThreatPattern] | None = None


def catalog() -> list[ThreatPattern]:
    """The compiled built-in catalog, created once per process."""
    global _DEFAULT_CATALOG
    if _DEFAULT_CATALOG is None:
        _DEFAULT_CATALOG = default_catalog()
    return _DEFAULT_CATALOG


# ---------------------------------------------------------------------------
# Phase 1: capability inference
# ---------------------------------------------------------------------------

_URL_RE = re.compile(r"https?://")  # scheme is case-sensitive
_HTTP_WRITE_VERB_RE = re.compile(r"(?i)\b(post|put|patch|delete)\b")
_NET_CLIENT_RE = re.compile(r"(?i)\b(curl|wget|requests\.\w+|httpx\.\w+|urllib\.request|urlopen)\b|fetch\s*\(")
_NET_CLIENT_WRITE_RE = re.compile(
    r"(?i)(requests|httpx)\.(post|put|patch|delete)\b"
    r"|curl\s+[^\n|]*(-X\s*(POST|PUT|PATCH|DELETE)|--data\b|-d\b|-F\b|-T\b|--upload-file)"
    r"|wget\s+[^\n]*--post-"
)
_SHELL_EXEC_RE = re.compile(
    r"(?i)\|\s*(sh|bash|zsh)\b|\b(sh|bash|zsh)\s+-c\b|subprocess\.\w+|os\.system|os\.popen"
    r"|\bpopen\s*\(|pty\.spawn|\bexec\s*\(|\beval\s*\(|os\.exec\w*"
)
_ENV_READ_RE = re.compile(
    r"os\.environ|os\.getenv|\bgetenv\s*\(|process\.env|\bprintenv\b|\$\{[A-Za-z_]\w*\}|\$[A-Z_]{2,}\b"
)
_FILE_READ_RE = re.compile(r"(?i)\b(read\w*|cat|load\w*|open)\b")
_FILE_WRITE_RE = re.compile(
    r"(?i)\b(write\w*|save\w*|append\w*|delete\w*|remove\w*|unlink|rmdir|mkdir|rm|mv|move\w*|rename\w*|truncate\w*|rmtree)\b"
)
_SKILL_INVOKE_RE = re.compile(r"(?i)\b(invoke_skill|use_skill|call_skill|skill\.invoke|invoke\s+skill|delegate\s+to\s+skill)\b")
_DB_READ_RE = re.compile(r"(?i)\bselect\s+[\w*,.\s]+\s+from\b|\b(sqlite3|psycopg2?|mysql|database\.query)\b")
_DB_WRITE_RE = re.compile(r"(?i)\b(insert\s+into|update\s+\w+\s+set|delete\s+from|drop\s+(table|database))\b")
_CLIPBOARD_READ_RE = re.compile(r"(?i)\b(pbpaste|paste_from_clipboard|clipboard\.(read|paste)|xclip\s+-o|pyperclip\.paste)\b")
_CLIPBOARD_WRITE_RE = re.compile(r"(?i)\b(pbcopy|copy_to_clipboard|clipboard\.(write|copy)|pyperclip\.copy)\b")
_BROWSER_READ_RE = re.compile(r"(?i)\b(webbrowser\.open|browser\.(open|navigate|get)|open_url|page\.goto)\b")
_BROWSER_WRITE_RE = re.compile(r"(?i)\b(browser|page)\.(click|fill|submit|type|execute_script)\b")


def _infer_field(f: ContentField) -> CapabilitySet:
    caps = CapabilitySet.bottom()
    text = f.text

    has_url = f.kind is FieldKind.URL or bool(_URL_RE.search(text))
    if has_url or _NET_CLIENT_RE.search(text):
        caps = caps.with_capability(ResourceType.NETWORK, AccessLevel.READ)
    if (has_url and _HTTP_WRITE_VERB_RE.search(text)) or _NET_CLIENT_WRITE_RE.search(text):
        caps = caps.with_capability(ResourceType.NETWORK, AccessLevel.WRITE)

    if f.kind is FieldKind.SHELL_COMMAND or _SHELL_EXEC_RE.search(text):
        caps = caps.with_capability(ResourceType.SHELL, AccessLevel.WRITE)

    if f.kind is FieldKind.ENV_REFERENCE or _ENV_READ_RE.search(text):
        caps = caps.with_capability(ResourceType.ENVIRONMENT, AccessLevel.READ)

    if f.kind is not FieldKind.URL:  # keyword scan inside a bare URL is noise
        if _FILE_READ_RE.search(text):
            caps = caps.with_capability(ResourceType.FILESYSTEM, AccessLevel.READ)
        if _FILE_WRITE_RE.search(text):
            caps = caps.with_capability(ResourceType.FILESYSTEM, AccessLevel.WRITE)
        if _SKILL_INVOKE_RE.search(text):
            caps = caps.with_capability(ResourceType.SKILL_INVOKE, AccessLevel.WRITE)
        if _DB_READ_RE.search(text):
            caps = caps.with_capability(ResourceType.DATABASE, AccessLevel.READ)
        if _DB_WRITE_RE.search(text):
            caps = caps.with_capability(ResourceType.DATABASE, AccessLevel.WRITE)
        if _CLIPBOARD_READ_RE.search(text):
            caps = caps.with_capability(ResourceType.CLIPBOARD, AccessLevel.READ)
        if _CLIPBOARD_WRITE_RE.search(text):
            caps = caps.with_capability(ResourceType.CLIPBOARD, AccessLevel.WRITE)
        if _BROWSER_READ_RE.search(text):
            caps = caps.with_capability(ResourceType.BROWSER, AccessLevel.READ)
        if _BROWSER_WRITE_RE.search(text):
            caps = caps.with_capability(ResourceType.BROWSER, AccessLevel.WRITE)
    return caps


def infer_capabilities(skill: Skill) -> CapabilitySet:
    """Pointwise join of per-field transfer-function outputs."""
    caps = CapabilitySet.bottom()
    for f in skill.content_fields:
        caps = caps.join(_infer_field(f))
    return caps


# ---------------------------------------------------------------------------
# Phase 2: pattern detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    pattern_id: str
    severity: Severity
    attack_class: AttackClass
    message: str
    line: int
    column: int
    evidence: str

    def to_dict(self) -> dict:
        return {
            "pattern_id": self.pattern_id,
            "severity": self.severity.name,
            "attack_class": self.attack_class.value,
            "message": self.message,
            "line": self.line,
            "column": self.column,
            "evidence": self.evidence,
        }


def match_patterns(skill: Skill, patterns: list[ThreatPattern] | None = None) -> list[Finding]:
    """Run every catalog regex over every content field."""
    patterns = patterns if patterns is not None else catalog()
    findings: list[Finding] = []
    seen: set[tuple[str, int, str]] = set()
    for f in skill.content_fields:
        for pat in patterns:
            for m in pat.compiled.finditer(f.text):
                prefix = f.text[: m.start()]
                line = f.line + prefix.count("\n")
                column = (m.start() - prefix.rfind("\n")) if "\n" in prefix else f.column + m.start()
                evidence = m.group(0)
                if len(evidence) > 120:
                    evidence = evidence[:117] + "..."
                # Extracted url/env fields repeat text from their host
                # field; the same match on the same line is one finding.
                key = (pat.id, line, evidence)
                if key in seen:
                    continue
                seen.add(key)
                findings.append(
                    Finding(pat.id, pat.severity, pat.attack_class, pat.description, line, column, evidence)
                )
    findings.sort(key=lambda x: (x.line, x.column, x.pattern_id))
    return findings


def name_similarity_finding(skill: Skill) -> Finding | None:
    lookalike = find_name_lookalike(skill.name)
    if lookalike is None:
        return None
    return Finding(
        pattern_id=TYPOSQUAT_PATTERN_ID,
        severity=Severity.MEDIUM,
        attack_class=AttackClass.TYPOSQUATTING,
        message=f"skill name {skill.name!r} closely imitates well-known skill {lookalike!r}",
        line=1,
        column=1,
        evidence=skill.name,
    )


# ---------------------------------------------------------------------------
# Information flow tracing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowFinding:
    source: str  # environment | filesystem | credential
    sink: str  # network | process
    path: tuple[tuple[ContentField, str], ...]
    severity: Severity = Severity.HIGH

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "sink": self.sink,
            "severity": self.severity.name,
            "path": [
                {"line": f.line, "kind": f.kind.value, "token": token}
                for f, token in self.path
            ],
        }


_ASSIGN_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*=\s*(.+)$", re.S)
_FLOW_SOURCES = (
    ("environment", re.compile(r"os\.environ(?:\.get)?|os\.getenv|\bgetenv\s*\(|process\.env")),
    ("filesystem", re.compile(r"(?i)open\s*\([^)]*\)(\.read\w*\()?|\.read_text\s*\(|\.read_bytes\s*\(|readlines\s*\(")),
    ("credential", re.compile(r"(?i)\b(password|passwd|secret|token|api_key|apikey|credential)\w*\b")),
)
_FLOW_SINKS = (
    ("network", re.compile(r"(?i)requests\.(post|get|put|patch|delete)\s*\(|urlopen\s*\(|httpx\.\w+\s*\(|http\.client|socket\.send\w*|fetch\s*\(|\bcurl\b")),
    ("process", re.compile(r"(?i)subprocess\.(run|call|popen|check_output|check_call)|os\.system|os\.popen|os\.exec\w*|pty\.spawn")),
)
_ENCODING_TOKEN_RE = re.compile(r"(?i)base64|b64encode|btoa\s*\(")
# URL schemes stay case-sensitive; client-library tokens do not.
_OUTBOUND_URL_RE = re.compile(r"https?://")
_OUTBOUND_CLIENT_RE = re.compile(r"(?i)\brequests\.|httpx\.|\bcurl\b|fetch\s*\(|urlopen\s*\(")


def _logical_statements(text: str) -> list[tuple[int, str]]:
    """Join bracket-continued lines into single statements.

    Returns (line offset, statement text) pairs; offsets are zero-based
    relative to the block start.
    """
    statements: list[tuple[int, str]] = []
    buf: list[str] = []
    start = 0
    depth = 0
    for i, line in enumerate(text.split("\n")):
        if not buf:
            start = i
        buf.append(line)
        depth += line.count("(") + line.count("[") + line.count("{")
        depth -= line.count(")") + line.count("]") + line.count("}")
        if depth <= 0:
            stmt = "\n".join(buf).strip()
            if stmt:
                statements.append((start, stmt))
            buf = []
            depth = 0
    if buf:
        stmt = "\n".join(buf).strip()
        if stmt:
            statements.append((start, stmt))
    return statements


def _first_source(text: str) -> tuple[str, str] | None:
    for kind, rx in _FLOW_SOURCES:
        m = rx.search(text)
        if m:
            return kind, m.group(0)
    return None


def _first_sink(text: str) -> tuple[str, str] | None:
    for kind, rx in _FLOW_SINKS:
        m = rx.search(text)
        if m:
            return kind, m.group(0)
    return None


def trace_flows(skill: Skill) -> list[FlowFinding]:
    """Statement-level taint inside each code block, plus the cross-field
    encode-and-transmit check."""
    findings: list[FlowFinding] = []
    for f in skill.fields_of(FieldKind.CODE_BLOCK):
        tainted: dict[str, tuple[str, tuple[tuple[ContentField, str], ...]]] = {}
        for _offset, stmt in _logical_statements(f.text):
            assign = _ASSIGN_RE.match(stmt)
            lhs, rhs = (assign.group(1), assign.group(2)) if assign else (None, stmt)
            source = _first_source(rhs)
            sink = _first_sink(stmt)
            referenced = next(
                (v for v in tainted if re.search(rf"\b{re.escape(v)}\b", rhs)),
                None,
            )
            if sink is not None:
                if referenced is not None:
                    src_kind, path = tainted[referenced]
                    findings.append(FlowFinding(src_kind, sink[0], path + ((f, sink[1]),)))
                elif source is not None:
                    findings.append(
                        FlowFinding(source[0], sink[0], ((f, source[1]), (f, sink[1])))
                    )
            if lhs is not None:
                if source is not None:
                    tainted[lhs] = (source[0], ((f, source[1]),))
                elif referenced is not None:
                    src_kind, path = tainted[referenced]
                    tainted[lhs] = (src_kind, path + ((f, lhs),))

    encode_hit: tuple[ContentField, str] | None = None
    net_hit: tuple[ContentField, str] | None = None
    for f in skill.content_fields:
        if encode_hit is None:
            m = _ENCODING_TOKEN_RE.search(f.text)
            if m:
                encode_hit = (f, m.group(0))
        if net_hit is None:
            m = _OUTBOUND_URL_RE.search(f.text) or _OUTBOUND_CLIENT_RE.search(f.text)
            if m:
                net_hit = (f, m.group(0))
    if encode_hit and net_hit:
        findings.append(FlowFinding("credential", "network", (encode_hit, net_hit)))
    return findings


# ---------------------------------------------------------------------------
# Phase 3 and report assembly
# ---------------------------------------------------------------------------

def check_violations(skill: Skill, inferred: CapabilitySet) -> frozenset[Capability]:
    """Capabilities the skill requires beyond what it declares."""
    return cap_violations(inferred, skill.declared_capabilities)


class AnalysisStatus(str, Enum):
    CLEAN = "clean"
    WARNING = "warning"
    CRITICAL = "critical"


@dataclass
class AnalysisReport:
    skill_id: str
    skill_name: str
    inferred: CapabilitySet
    declared: CapabilitySet
    findings: list[Finding]
    flow_findings: list[FlowFinding]
    capability_violations: frozenset[Capability]
    status: AnalysisStatus
    max_severity: Severity
    analyzed_at: datetime

    @property
    def is_malicious(self) -> bool:
        """Classification rule: any finding of severity MEDIUM or above."""
        return self.max_severity >= Severity.MEDIUM

    def exceeds(self, threshold: Severity) -> bool:
        return self.max_severity >= threshold

    def to_dict(self) -> dict:
        return {
            "skill_id": self.skill_id,
            "skill_name": self.skill_name,
            "inferred_capabilities": self.inferred.as_dict(),
            "declared_capabilities": self.declared.as_dict(),
            "findings": [f.to_dict() for f in self.findings],
            "flow_findings": [f.to_dict() for f in self.flow_findings],
            "capability_violations": sorted(str(v) for v in self.capability_violations),
            "status": self.status.value,
            "max_severity": self.max_severity.name,
            "analyzed_at": self.analyzed_at.astimezone(timezone.utc).strftime(
                "%Y-%m-%dT%H:%M:%SZ"
            ),
        }


def analyze(
    skill: Skill,
    patterns: list[ThreatPattern] | None = None,
    *,
    include_flows: bool = True,
    now: datetime | None = None,
) -> AnalysisReport:
    """Run all three phases and assemble the report.

    The status partition: clean means no findings, flows, or violations;
    critical means max severity >= MEDIUM or any capability violation;
    everything else is a warning.
    """
    inferred = infer_capabilities(skill)
    findings = match_patterns(skill, patterns)
    name_finding = name_similarity_finding(skill)
    if name_finding is not None:
        findings.append(name_finding)
    flow_findings = trace_flows(skill) if include_flows else []
    viols = check_violations(skill, inferred)

    severities = [f.severity for f in findings] + [f.severity for f in flow_findings]
    max_severity = max(severities, default=Severity.NONE)
    if not findings and not flow_findings and not viols:
        status = AnalysisStatus.CLEAN
    elif max_severity >= Severity.MEDIUM or viols:
        status = AnalysisStatus.CRITICAL
    else:
        status = AnalysisStatus.WARNING

    return AnalysisReport(
        skill_id=skill.id,
        skill_name=skill.name,
        inferred=inferred,
        declared=skill.declared_capabilities,
        findings=findings,
        flow_findings=flow_findings,
        capability_violations=viols,
        status=status,
        max_severity=max_severity,
        analyzed_at=now or datetime.now(timezone.utc),
    )
