"""Unified skill representation and the three manifest parsers.

Supported formats:
  * claude   -- Markdown with leading YAML frontmatter fenced by "---"
  * mcp      -- JSON with a top-level "mcpServers" object (one skill per server)
  * openclaw -- YAML mapping with name/version/actions/permissions

Each parser normalizes a manifest into `Skill`: identity, declared
capabilities, content fields for analysis, and dependency constraints.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import yaml

from .capability import CapabilitySet, parse_capability_strings
from .versions import ConstraintExpr, SemVer, VersionError


class SkillFormat(str, Enum):
    CLAUDE = "claude"
    MCP = "mcp"
    OPENCLAW = "openclaw"


class FieldKind(str, Enum):
    INSTRUCTION_TEXT = "instruction_text"
    SHELL_COMMAND = "shell_command"
    URL = "url"
    ENV_REFERENCE = "env_reference"
    CODE_BLOCK = "code_block"
    CONFIG_VALUE = "config_value"


class SkillParseError(ValueError):
    """A manifest could not be parsed; carries the offending location."""

    def __init__(self, message: str, *, path: str = "", line: int = 0):
        self.path = path
        self.line = line
        where = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(f"{where}{message}")


class UnrecognizedFormat(SkillParseError):
    """No detection rule matched the file."""


class EmptyManifest(SkillParseError):
    """An MCP config with an empty mcpServers object."""


@dataclass(frozen=True)
class ContentField:
    kind: FieldKind
    text: str
    line: int = 1
    column: int = 1


@dataclass(frozen=True)
class Skill:
    id: str
    name: str
    version: SemVer
    format: SkillFormat
    description: str
    declared_capabilities: CapabilitySet
    declared_capability_names: tuple[str, ...]
    content_fields: tuple[ContentField, ...]
    dependencies: tuple[tuple[str, ConstraintExpr], ...]
    source_path: str
    raw_bytes: bytes
    unknown_capability_names: tuple[str, ...] = ()

    def fields_of(self, *kinds: FieldKind) -> tuple[ContentField, ...]:
        wanted = set(kinds)
        return tuple(f for f in self.content_fields if f.kind in wanted)


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str


@dataclass
class DiscoveryResult:
    skills: list[Skill] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


URL_RE = re.compile(r"https?://[^\s\"'<>\\)\]]+")  # scheme match is case-sensitive
ENV_TOKEN_RE = re.compile(
    r"os\.environ(?:\.get)?|os\.getenv|\bgetenv\s*\(|process\.env(?:\.[A-Za-z_]\w*)?"
    r"|\$\{[A-Za-z_]\w*\}|\$[A-Z_]{2,}\b"
)

_SHELL_FENCE_LANGS = {"bash", "sh", "shell", "zsh", "console", "terminal"}


def _decode(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")


def _find_location(lines: list[str], needle: str, default: int = 1) -> tuple[int, int]:
    """Best-effort (line, column) of the first occurrence of `needle`."""
    if needle:
        probe = needle.splitlines()[0][:80]
        for i, line in enumerate(lines, 1):
            col = line.find(probe)
            if col >= 0:
                return i, col + 1
    return default, 1


def _extract_embedded(fields: list[ContentField]) -> list[ContentField]:
    """Append url / env_reference fields found inside each base field."""
    out: list[ContentField] = []
    for f in fields:
        out.append(f)
        if f.kind in (FieldKind.URL, FieldKind.ENV_REFERENCE):
            continue
        for m in URL_RE.finditer(f.text):
            line = f.line + f.text[: m.start()].count("\n")
            out.append(ContentField(FieldKind.URL, m.group(0), line, 1))
        for m in ENV_TOKEN_RE.finditer(f.text):
            line = f.line + f.text[: m.start()].count("\n")
            out.append(ContentField(FieldKind.ENV_REFERENCE, m.group(0), line, 1))
    return out


def _parse_version(value: object, *, path: str) -> SemVer:
    if value is None:
        return SemVer(0, 0, 0)
    try:
        return SemVer.parse(str(value))
    except VersionError as exc:
        raise SkillParseError(str(exc), path=path) from exc


def _parse_dependencies(value: object, *, path: str) -> tuple[tuple[str, ConstraintExpr], ...]:
    if value is None:
        return ()
    if not isinstance(value, dict):
        raise SkillParseError("dependencies must be a mapping of name to constraint", path=path)
    deps: list[tuple[str, ConstraintExpr]] = []
    for name, constraint in value.items():
        try:
            deps.append((str(name), ConstraintExpr.parse(str(constraint))))
        except VersionError as exc:
            raise SkillParseError(f"dependency {name!r}: {exc}", path=path) from exc
    return tuple(deps)


def _capability_list(value: object, *, path: str) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [value]
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    raise SkillParseError("capabilities must be a list of strings", path=path)


# ---------------------------------------------------------------------------
# Claude format: Markdown + YAML frontmatter
# ---------------------------------------------------------------------------

def parse_claude(data: bytes, *, source_path: str = "", skill_id: str = "") -> Skill:
    text = _decode(data)
    lines = text.split("\n")
    if not lines or lines[0].strip() != "---":
        raise SkillParseError("missing frontmatter open fence '---'", path=source_path, line=1)
    end = None
    for i, line in enumerate(lines[1:], 1):
        if line.strip() == "---":
            end = i
            break
    if end is None:
        raise SkillParseError("missing frontmatter close fence '---'", path=source_path, line=len(lines))

    front_text = "\n".join(lines[1:end])
    try:
        front = yaml.safe_load(front_text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = (mark.line + 2) if mark else 1
        raise SkillParseError(f"malformed frontmatter: {exc}", path=source_path, line=line) from exc
    if not isinstance(front, dict):
        raise SkillParseError("frontmatter must be a mapping", path=source_path, line=2)

    raw_name = front.get("name")
    if raw_name is not None and not isinstance(raw_name, (str, int, float)):
        raise SkillParseError("frontmatter 'name' must be a scalar", path=source_path, line=2)
    name = str(raw_name or "").strip()
    if not name:
        raise SkillParseError("frontmatter requires a nonempty 'name'", path=source_path, line=2)
    version = _parse_version(front.get("version"), path=source_path)
    description = str(front.get("description") or "")
    declared, unknown = parse_capability_strings(_capability_list(front.get("capabilities"), path=source_path))
    deps = _parse_dependencies(front.get("dependencies"), path=source_path)

    fields: list[ContentField] = []
    if description:
        loc = _find_location(lines, description)
        fields.append(ContentField(FieldKind.INSTRUCTION_TEXT, description, loc[0], loc[1]))
    fields.extend(_parse_markdown_body(lines, body_start=end + 1))

    return Skill(
        id=skill_id or source_path or name,
        name=name,
        version=version,
        format=SkillFormat.CLAUDE,
        description=description,
        declared_capabilities=declared,
        declared_capability_names=tuple(_capability_list(front.get("capabilities"), path=source_path)),
        content_fields=tuple(_extract_embedded(fields)),
        dependencies=deps,
        source_path=source_path,
        raw_bytes=data,
        unknown_capability_names=tuple(unknown),
    )


def _parse_markdown_body(lines: list[str], *, body_start: int) -> list[ContentField]:
    fields: list[ContentField] = []
    paragraph: list[str] = []
    paragraph_line = 0
    in_fence = False
    fence_lang = ""
    fence_lines: list[str] = []
    fence_start = 0

    def flush_paragraph() -> None:
        nonlocal paragraph, paragraph_line
        text = "\n".join(paragraph).strip()
        if text:
            fields.append(ContentField(FieldKind.INSTRUCTION_TEXT, text, paragraph_line, 1))
        paragraph = []
        paragraph_line = 0

    for i in range(body_start, len(lines)):
        line = lines[i]
        lineno = i + 1
        stripped = line.strip()
        if stripped.startswith("```"):
            if not in_fence:
                flush_paragraph()
                in_fence = True
                fence_lang = stripped[3:].strip().lower()
                fence_lines = []
                fence_start = lineno + 1
            else:
                code = "\n".join(fence_lines)
                if fence_lang in _SHELL_FENCE_LANGS:
                    for offset, cmd in enumerate(fence_lines):
                        if cmd.strip():
                            fields.append(
                                ContentField(FieldKind.SHELL_COMMAND, cmd.strip(), fence_start + offset, 1)
                            )
                elif code.strip():
                    fields.append(ContentField(FieldKind.CODE_BLOCK, code, fence_start, 1))
                in_fence = False
            continue
        if in_fence:
            fence_lines.append(line)
            continue
        if not stripped:
            flush_paragraph()
            continue
        if not paragraph:
            paragraph_line = lineno
        paragraph.append(stripped)
    flush_paragraph()
    # Unterminated fence: keep what we saw as a code block.
    if in_fence and fence_lines:
        fields.append(ContentField(FieldKind.CODE_BLOCK, "\n".join(fence_lines), fence_start, 1))
    return fields


# ---------------------------------------------------------------------------
# MCP format: JSON server configs
# ---------------------------------------------------------------------------

def parse_mcp(data: bytes, *, source_path: str = "", skill_id: str = "") -> list[Skill]:
    text = _decode(data)
    lines = text.split("\n")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SkillParseError(f"invalid JSON: {exc.msg}", path=source_path, line=exc.lineno) from exc
    if not isinstance(doc, dict) or "mcpServers" not in doc:
        raise SkillParseError("expected a top-level 'mcpServers' object", path=source_path)
    servers = doc["mcpServers"]
    if not isinstance(servers, dict) or not servers:
        raise EmptyManifest("mcpServers is empty", path=source_path)

    base_id = skill_id or source_path
    skills: list[Skill] = []
    multiple = len(servers) > 1
    for server_name, entry in servers.items():
        if not isinstance(entry, dict):
            raise SkillParseError(f"server {server_name!r} must be an object", path=source_path)
        entry_line, entry_col = _find_location(lines, f'"{server_name}"')
        command = str(entry.get("command") or "").strip()
        raw_args = entry.get("args")
        if raw_args is None:
            raw_args = []
        if not isinstance(raw_args, list):
            raise SkillParseError(
                f"server {server_name!r}: 'args' must be a list", path=source_path
            )
        args = [str(a) for a in raw_args]
        command_line = " ".join([command, *args]).strip()

        fields: list[ContentField] = []
        if command_line:
            fields.append(ContentField(FieldKind.SHELL_COMMAND, command_line, entry_line, entry_col))
        env = entry.get("env") or {}
        if isinstance(env, dict):
            for key, value in env.items():
                loc = _find_location(lines, f'"{key}"', default=entry_line)
                fields.append(ContentField(FieldKind.ENV_REFERENCE, f"{key}={value}", loc[0], loc[1]))
        desc = str(entry.get("description") or "")
        if desc:
            loc = _find_location(lines, desc, default=entry_line)
            fields.append(ContentField(FieldKind.INSTRUCTION_TEXT, desc, loc[0], loc[1]))
        for key in ("transport", "url"):
            value = entry.get(key)
            if isinstance(value, str) and value:
                loc = _find_location(lines, value, default=entry_line)
                fields.append(ContentField(FieldKind.CONFIG_VALUE, value, loc[0], loc[1]))

        declared, unknown = parse_capability_strings(_capability_list(entry.get("capabilities"), path=source_path))
        skills.append(
            Skill(
                id=f"{base_id}#{server_name}" if multiple else (base_id or server_name),
                name=str(server_name),
                version=_parse_version(entry.get("version"), path=source_path),
                format=SkillFormat.MCP,
                description=desc,
                declared_capabilities=declared,
                declared_capability_names=tuple(_capability_list(entry.get("capabilities"), path=source_path)),
                content_fields=tuple(_extract_embedded(fields)),
                dependencies=_parse_dependencies(entry.get("dependencies"), path=source_path),
                source_path=source_path,
                raw_bytes=data,
                unknown_capability_names=tuple(unknown),
            )
        )
    return skills


# ---------------------------------------------------------------------------
# OpenClaw format: YAML manifests
# ---------------------------------------------------------------------------

def parse_openclaw(data: bytes, *, source_path: str = "", skill_id: str = "") -> Skill:
    text = _decode(data)
    lines = text.split("\n")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = (mark.line + 1) if mark else 1
        raise SkillParseError(f"invalid YAML: {exc}", path=source_path, line=line) from exc
    if not isinstance(doc, dict):
        raise SkillParseError("manifest must be a YAML mapping", path=source_path)
    raw_name = doc.get("name")
    if not isinstance(raw_name, (str, int, float)):
        raise SkillParseError("manifest requires a scalar 'name'", path=source_path)
    name = str(raw_name).strip()
    if not name:
        raise SkillParseError("manifest requires a nonempty 'name'", path=source_path)

    version = _parse_version(doc.get("version"), path=source_path)
    description = str(doc.get("description") or "")
    declared, unknown = parse_capability_strings(_capability_list(doc.get("permissions"), path=source_path))
    deps = _parse_dependencies(doc.get("dependencies"), path=source_path)

    fields: list[ContentField] = []
    if description:
        loc = _find_location(lines, description)
        fields.append(ContentField(FieldKind.INSTRUCTION_TEXT, description, loc[0], loc[1]))

    actions = doc.get("actions") or []
    if isinstance(actions, list):
        for action in actions:
            if not isinstance(action, dict):
                continue
            for key in ("description",):
                value = action.get(key)
                if isinstance(value, str) and value:
                    loc = _find_location(lines, value)
                    fields.append(ContentField(FieldKind.INSTRUCTION_TEXT, value, loc[0], loc[1]))
            for key in ("input", "output"):
                sub = action.get(key)
                if isinstance(sub, dict):
                    value = sub.get("description")
                    if isinstance(value, str) and value:
                        loc = _find_location(lines, value)
                        fields.append(ContentField(FieldKind.INSTRUCTION_TEXT, value, loc[0], loc[1]))
            for key in ("script", "run", "code", "command"):
                value = action.get(key)
                if isinstance(value, str) and value.strip():
                    loc = _find_location(lines, value)
                    kind = FieldKind.SHELL_COMMAND if key == "command" else FieldKind.CODE_BLOCK
                    fields.append(ContentField(kind, value, loc[0], loc[1]))

    env_map = doc.get("environment") or {}
    if isinstance(env_map, dict):
        for key, value in env_map.items():
            loc = _find_location(lines, str(key))
            fields.append(ContentField(FieldKind.ENV_REFERENCE, f"{key}={value}", loc[0], loc[1]))

    triggers = doc.get("triggers") or []
    if isinstance(triggers, list):
        for trig in triggers:
            if isinstance(trig, str) and trig:
                loc = _find_location(lines, trig)
                fields.append(ContentField(FieldKind.CONFIG_VALUE, trig, loc[0], loc[1]))

    return Skill(
        id=skill_id or source_path or name,
        name=name,
        version=version,
        format=SkillFormat.OPENCLAW,
        description=description,
        declared_capabilities=declared,
        declared_capability_names=tuple(_capability_list(doc.get("permissions"), path=source_path)),
        content_fields=tuple(_extract_embedded(fields)),
        dependencies=deps,
        source_path=source_path,
        raw_bytes=data,
        unknown_capability_names=tuple(unknown),
    )


# ---------------------------------------------------------------------------
# Format detection and discovery
# ---------------------------------------------------------------------------

def detect_format(path: str, data: bytes) -> SkillFormat:
    """Dispatch on file extension, then content heuristics."""
    suffix = Path(path).suffix.lower()
    text = _decode(data)
    if suffix == ".md":
        return SkillFormat.CLAUDE
    if suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            raise UnrecognizedFormat("not valid JSON", path=str(path))
        if isinstance(doc, dict) and "mcpServers" in doc:
            return SkillFormat.MCP
        raise UnrecognizedFormat("JSON without a top-level 'mcpServers' key", path=str(path))
    if suffix in (".yaml", ".yml"):
        return SkillFormat.OPENCLAW
    # Extension is ambiguous or missing: sniff the content.
    if text.lstrip().startswith("---"):
        return SkillFormat.CLAUDE
    try:
        doc = json.loads(text)
        if isinstance(doc, dict) and "mcpServers" in doc:
            return SkillFormat.MCP
    except json.JSONDecodeError:
        pass
    try:
        doc = yaml.safe_load(text)
        if isinstance(doc, dict) and doc.get("name"):
            return SkillFormat.OPENCLAW
    except yaml.YAMLError:
        pass
    raise UnrecognizedFormat("no detection rule matched", path=str(path))


def parse_file(path: str | Path, *, root: str | Path | None = None) -> list[Skill]:
    """Parse one manifest file into its skills (MCP files may yield several)."""
    p = Path(path)
    data = p.read_bytes()
    if root is not None:
        rel = p.resolve().relative_to(Path(root).resolve()).as_posix()
    else:
        rel = p.as_posix()
    fmt = detect_format(str(p), data)
    if fmt is SkillFormat.CLAUDE:
        return [parse_claude(data, source_path=rel, skill_id=rel)]
    if fmt is SkillFormat.MCP:
        return parse_mcp(data, source_path=rel, skill_id=rel)
    return [parse_openclaw(data, source_path=rel, skill_id=rel)]


def discover_skills(root: str | Path) -> DiscoveryResult:
    """Recursively parse every recognizable skill file under `root`.

    Parse failures become per-file diagnostics rather than fatal errors;
    the returned skills are sorted by (source_path, id) so the result is a
    pure function of the path set.
    """
    root_path = Path(root)
    if not root_path.exists():
        raise FileNotFoundError(f"scan root does not exist: {root}")
    if not root_path.is_dir():
        raise NotADirectoryError(f"scan root is not a directory: {root}")

    result = DiscoveryResult()
    for path in sorted(root_path.rglob("*")):
        if not path.is_file():
            continue
        try:
            data = path.read_bytes()
        except OSError as exc:
            result.diagnostics.append(Diagnostic(path.as_posix(), f"unreadable: {exc}"))
            continue
        try:
            detect_format(str(path), data)
        except UnrecognizedFormat:
            continue
        try:
            result.skills.extend(parse_file(path, root=root_path))
        except SkillParseError as exc:
            result.diagnostics.append(Diagnostic(path.as_posix(), str(exc)))
    result.skills.sort(key=lambda s: (s.source_path, s.id))
    return result
