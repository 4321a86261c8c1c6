"""Threat pattern catalog: severities, attack classes, and built-in signatures.

Signatures are keyed A1..A13 after the attack families they detect.
Command keywords match case-insensitively; URL schemes are matched
case-sensitively because shells and HTTP stacks treat them that way.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path


class Severity(IntEnum):
    NONE = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3
    CRITICAL = 4

    @classmethod
    def parse(cls, name: str) -> "Severity":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown severity: {name!r}") from None


class AttackClass(str, Enum):
    DATA_EXFILTRATION = "c1_data_exfiltration"
    PRIVILEGE_ESCALATION = "c2_privilege_escalation"
    PROMPT_INJECTION = "c3_prompt_injection"
    DEPENDENCY_CONFUSION = "c4_dependency_confusion"
    TYPOSQUATTING = "c5_typosquatting"
    NAMESPACE_SQUATTING = "c6_namespace_squatting"

    @classmethod
    def parse(cls, name: str) -> "AttackClass":
        text = name.strip().lower()
        for member in cls:
            if member.value == text or member.value.split("_", 1)[0] == text:
                return member
        raise ValueError(f"unknown attack class: {name!r}")


@dataclass
class ThreatPattern:
    id: str
    regex: str
    severity: Severity
    attack_class: AttackClass
    attack_type: str  # A1..A13 family this signature belongs to
    description: str
    compiled: re.Pattern = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.severity < Severity.LOW:
            raise ValueError(f"pattern {self.id}: severity must be at least LOW")
        self.compiled = re.compile(self.regex)


CATALOG_VERSION = "2026.03"


def _p(pid: str, regex: str, severity: Severity, klass: AttackClass, attack: str, desc: str) -> ThreatPattern:
    return ThreatPattern(pid, regex, severity, klass, attack, desc)


_C1 = AttackClass.DATA_EXFILTRATION
_C2 = AttackClass.PRIVILEGE_ESCALATION
_C3 = AttackClass.PROMPT_INJECTION


def default_catalog() -> list[ThreatPattern]:
    """Built-in signatures covering attack families A1-A10 and A13.

    Typosquatting (A11) is handled by the name-similarity heuristic in the
    analyzer; dependency confusion (A12) needs registry data and has no
    local signature.
    """
    return [
        # A1: data exfiltration over HTTP
        _p("A1-01", r"(?is)(dict\(os\.environ\)|os\.environ).{0,500}?requests\.post",
           Severity.CRITICAL, _C1, "A1", "environment capture posted to an HTTP endpoint"),
        _p("A1-02", r"(?is)requests\.post.{0,500}?os\.environ",
           Severity.CRITICAL, _C1, "A1", "HTTP POST carrying environment contents"),
        _p("A1-03", r"(?i)curl\s+[^\n|]*(--data|-d\b|-F\b)[^\n|]*\$\((env|printenv|cat|whoami)",
           Severity.CRITICAL, _C1, "A1", "curl upload of command-substituted local data"),
        _p("A1-04", r"(?i)wget\s+[^\n]*--post-(data|file)",
           Severity.CRITICAL, _C1, "A1", "wget POST of local data"),
        _p("A1-05", r"http://(?!localhost\b|127\.0\.0\.1)",
           Severity.LOW, _C1, "A1", "plain-HTTP endpoint (unencrypted transport)"),
        # A2: data exfiltration over DNS
        _p("A2-01", r"(?i)\b(nslookup|dig|host)\s+[^\n]*\$[({]",
           Severity.CRITICAL, _C1, "A2", "DNS query with command-substituted label"),
        _p("A2-02", r"(?i)\b(dnscat|iodine|dns2tcp)\b",
           Severity.CRITICAL, _C1, "A2", "DNS tunneling tool"),
        _p("A2-03", r"(?i)\bsocket\.gethostbyname\s*\([^)]*\+",
           Severity.HIGH, _C1, "A2", "hostname assembled from data before resolution"),
        # A3: credential theft
        _p("A3-01", r"(?i)(os\.environ(\.get)?|getenv)\s*[\[\(]\s*[\"'][A-Z0-9_]*(KEY|TOKEN|SECRET|PASS|CRED)",
           Severity.CRITICAL, _C1, "A3", "secret-bearing environment variable read"),
        _p("A3-02", r"(?i)(cat|open|read|type)\b[^\n]{0,80}(\.aws/credentials|\.ssh/id_rsa|\.netrc|\.npmrc|\.kube/config)",
           Severity.CRITICAL, _C1, "A3", "credential file access"),
        _p("A3-03", r"(?i)security\s+find-(generic|internet)-password",
           Severity.CRITICAL, _C1, "A3", "macOS keychain extraction"),
        # A4: arbitrary code execution
        _p("A4-01", r"(?i)\b(curl|wget)\s+[^\n|]*\|\s*(sh|bash|zsh)\b",
           Severity.CRITICAL, _C2, "A4", "remote script piped to a shell"),
        _p("A4-02", r"(?is)subprocess\.(Popen|run|call|check_output)\s*\(\s*\[?\s*[\"'](sh|bash)[\"']\s*,\s*[\"']-c",
           Severity.CRITICAL, _C2, "A4", "subprocess shell -c invocation"),
        _p("A4-03", r"(?i)\beval\s*\(",
           Severity.HIGH, _C2, "A4", "dynamic code evaluation"),
        _p("A4-04", r"(?i)\bexec\s*\(",
           Severity.HIGH, _C2, "A4", "dynamic code execution"),
        _p("A4-05", r"(?i)\bpython\d?\s+-c\s+[\"'][^\"']*import\s+(subprocess|os)",
           Severity.CRITICAL, _C2, "A4", "inline interpreter payload spawning processes"),
        _p("A4-06", r"(?i)os\.system\s*\(",
           Severity.HIGH, _C2, "A4", "direct shell execution"),
        # A5: file system tampering
        _p("A5-01", r"(?i)\brm\s+-[a-z]*r[a-z]*f?\s+(/|~|\$HOME)",
           Severity.CRITICAL, _C2, "A5", "recursive delete of home or root paths"),
        _p("A5-02", r"(?i)shutil\.rmtree\s*\(\s*[\"'](/|~)",
           Severity.CRITICAL, _C2, "A5", "recursive tree removal outside the workspace"),
        _p("A5-03", r"(?i)chmod\s+(-R\s+)?0?777\b",
           Severity.HIGH, _C2, "A5", "world-writable permission change"),
        _p("A5-04", r"(?i)(>>?|tee(\s+-a)?)\s*/etc/(passwd|hosts|crontab|shadow)",
           Severity.CRITICAL, _C2, "A5", "system file overwrite"),
        # A6: privilege escalation
        _p("A6-01", r"(?i)\bsudo\s+\S",
           Severity.CRITICAL, _C2, "A6", "privilege elevation via sudo"),
        _p("A6-02", r"(?i)chmod\s+[ugoa]*\+s\b",
           Severity.CRITICAL, _C2, "A6", "setuid bit installation"),
        _p("A6-03", r"(?i)/etc/sudoers",
           Severity.CRITICAL, _C2, "A6", "sudoers manipulation"),
        _p("A6-04", r"(?i)\bsetuid\s*\(\s*0\s*\)|\bpkexec\b|\bdoas\b",
           Severity.CRITICAL, _C2, "A6", "root identity acquisition"),
        # A7: steganographic exfiltration (overt tool usage; multi-step
        # variants are caught by information flow analysis instead)
        _p("A7-01", r"(?i)\b(steghide|outguess|zsteg|stegano|stepic)\b",
           Severity.CRITICAL, _C1, "A7", "steganography tooling"),
        _p("A7-02", r"(?i)(lsb|least.significant.bit)[^\n]{0,60}(embed|encode|hide)",
           Severity.HIGH, _C1, "A7", "LSB payload embedding"),
        _p("A7-03", r"(?i)exiftool\s+[^\n]*-(comment|usercomment)=",
           Severity.HIGH, _C1, "A7", "metadata payload smuggling"),
        # A8: prompt injection
        _p("A8-01", r"(?i)ignore\s+(all\s+)?(previous|prior|earlier)\s+(instructions|directives|rules)",
           Severity.HIGH, _C3, "A8", "instruction override payload"),
        _p("A8-02", r"(?i)disregard\s+(the\s+)?(system|safety)\s+(prompt|instructions|guidelines)",
           Severity.HIGH, _C3, "A8", "system prompt subversion"),
        _p("A8-03", r"(?i)you\s+are\s+now\s+(in\s+)?(developer|dan|jailbreak|unrestricted)\s*mode",
           Severity.HIGH, _C3, "A8", "jailbreak persona activation"),
        _p("A8-04", r"(?i)<\|?im_start\|?>|\bsystem\s*:\s*override\b",
           Severity.HIGH, _C3, "A8", "chat-template token smuggling"),
        _p("A8-05", r"(?i)do\s+not\s+(reveal|mention|tell)\s+(this|these)\s+(instruction|prompt|message)",
           Severity.HIGH, _C3, "A8", "self-concealing instruction payload"),
        # A9: reverse shells
        _p("A9-01", r"(?i)\bnc(\.exe)?\s+-[a-z]*l",
           Severity.CRITICAL, _C1, "A9", "netcat listener"),
        _p("A9-02", r"(?i)\bnc(\.exe)?\s+[^\n]*-e\s*/bin/(sh|bash)",
           Severity.CRITICAL, _C1, "A9", "netcat bound to a shell"),
        _p("A9-03", r"(?i)bash\s+-i\s+>&\s*/dev/tcp/|/dev/tcp/\d",
           Severity.CRITICAL, _C1, "A9", "bash TCP-socket shell"),
        _p("A9-04", r"(?is)socket\.(socket|create_connection).{0,300}?(os\.dup2|pty\.spawn)",
           Severity.CRITICAL, _C1, "A9", "socket wired to an interactive shell"),
        # A10: cryptocurrency mining
        _p("A10-01", r"(?i)\b(xmrig|minerd|cpuminer|cgminer|nicehash|coinhive)\b",
           Severity.CRITICAL, _C2, "A10", "miner binary invocation"),
        _p("A10-02", r"(?i)stratum\+tcp://",
           Severity.CRITICAL, _C2, "A10", "mining pool protocol endpoint"),
        _p("A10-03", r"(?i)(monero|xmr)[-_ ]?(wallet|pool|address)",
           Severity.HIGH, _C2, "A10", "mining wallet configuration"),
        # A13: encoded / obfuscated payloads
        _p("A13-01", r"(?i)base64\s+(-d|--decode)[^\n|]*\|\s*(sh|bash|zsh|python)",
           Severity.CRITICAL, _C2, "A13", "base64 decode piped to an interpreter"),
        _p("A13-02", r"(?i)(eval|exec)\s*\(\s*(base64\.b64decode|codecs\.decode|bytes\.fromhex)",
           Severity.CRITICAL, _C2, "A13", "decode-and-execute payload"),
        _p("A13-03", r"(?i)eval\s*\(\s*atob\s*\(",
           Severity.CRITICAL, _C2, "A13", "JavaScript base64 payload execution"),
        _p("A13-04", r"(?i)bytes\.fromhex\s*\(\s*[\"'][0-9a-f]{40,}",
           Severity.HIGH, _C2, "A13", "long hex-encoded payload"),
        _p("A13-05", r"(\\x[0-9a-f]{2}){16,}",
           Severity.HIGH, _C2, "A13", "escaped-byte shellcode blob"),
    ]


def load_pattern_file(path: str | Path) -> list[ThreatPattern]:
    """Read user-supplied patterns: a JSON list of records.

    Each record: {id, regex, severity, attack_class, description[, attack_type]}.
    """
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(records, list):
        raise ValueError("pattern file must contain a JSON list")
    patterns: list[ThreatPattern] = []
    for rec in records:
        patterns.append(
            ThreatPattern(
                id=str(rec["id"]),
                regex=str(rec["regex"]),
                severity=Severity.parse(str(rec["severity"])),
                attack_class=AttackClass.parse(str(rec["attack_class"])),
                attack_type=str(rec.get("attack_type", "custom")),
                description=str(rec.get("description", "")),
            )
        )
    return patterns


# Well-known skill names used by the typosquat (A11) heuristic. Detection
# compares discovered skill names against this list with an edit-distance
# threshold; names identical to a popular entry are legitimate.
POPULAR_SKILL_NAMES: tuple[str, ...] = (
    "weather-api",
    "file-manager",
    "json-formatter",
    "api-client",
    "web-search",
    "git-helper",
    "code-review",
    "slack-notifier",
    "data-sync",
    "pdf-reader",
)

TYPOSQUAT_MAX_DISTANCE = 2
TYPOSQUAT_PATTERN_ID = "A11-name-similarity"


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance with the standard DP row recurrence."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def find_name_lookalike(name: str) -> str | None:
    """Return the popular skill name this one imitates, if any.

    A match requires edit distance in [1, TYPOSQUAT_MAX_DISTANCE]; distance
    zero is the genuine skill, not a squat.
    """
    candidate = name.strip().lower()
    best: tuple[int, str] | None = None
    for popular in POPULAR_SKILL_NAMES:
        dist = levenshtein(candidate, popular)
        if 0 < dist <= TYPOSQUAT_MAX_DISTANCE and (best is None or dist < best[0]):
            best = (dist, popular)
    return best[1] if best else None
