"""Semantic versions and constraint expressions.

Versions are plain major.minor.patch triples ordered lexicographically.
Constraints are conjunctions of atoms over the operators
==, !=, >=, <=, >, <, ^ (caret), ~ (tilde) and * (wildcard).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_SEMVER_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)$")

CONSTRAINT_OPS = ("==", "!=", ">=", "<=", ">", "<", "^", "~", "*")


class VersionError(ValueError):
    """Raised for malformed versions or constraint expressions."""


@dataclass(frozen=True, order=True)
class SemVer:
    major: int
    minor: int
    patch: int

    @classmethod
    def parse(cls, text: str) -> "SemVer":
        match = _SEMVER_RE.match(str(text).strip())
        if not match:
            raise VersionError(f"invalid version {text!r}: expected MAJOR.MINOR.PATCH")
        return cls(int(match.group(1)), int(match.group(2)), int(match.group(3)))

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"


@dataclass(frozen=True)
class ConstraintAtom:
    op: str
    target: SemVer | None  # None only for "*"

    def matches(self, version: SemVer) -> bool:
        t = self.target
        if self.op == "*":
            return True
        assert t is not None
        if self.op == "==":
            return version == t
        if self.op == "!=":
            return version != t
        if self.op == ">=":
            return version >= t
        if self.op == "<=":
            return version <= t
        if self.op == ">":
            return version > t
        if self.op == "<":
            return version < t
        if self.op == "^":
            # Same major and >= target; major 0 additionally pins the minor.
            if version.major != t.major:
                return False
            if t.major == 0 and version.minor != t.minor:
                return False
            return version >= t
        if self.op == "~":
            return (
                version.major == t.major
                and version.minor == t.minor
                and version.patch >= t.patch
            )
        raise VersionError(f"unknown constraint operator {self.op!r}")

    def __str__(self) -> str:
        return "*" if self.op == "*" else f"{self.op}{self.target}"


@dataclass(frozen=True)
class ConstraintExpr:
    """Conjunction of constraint atoms; satisfied iff every atom matches."""

    atoms: tuple[ConstraintAtom, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise VersionError("constraint must contain at least one atom")

    @classmethod
    def parse(cls, text: str) -> "ConstraintExpr":
        parts = [p for p in re.split(r"[,\s]+", str(text).strip()) if p]
        if not parts:
            raise VersionError("empty constraint expression")
        atoms = tuple(_parse_atom(p) for p in parts)
        return cls(atoms)

    @classmethod
    def any(cls) -> "ConstraintExpr":
        return cls((ConstraintAtom("*", None),))

    def satisfied_by(self, version: SemVer) -> bool:
        return all(atom.matches(version) for atom in self.atoms)

    def __str__(self) -> str:
        return ",".join(str(a) for a in self.atoms)


def _parse_atom(text: str) -> ConstraintAtom:
    if text == "*":
        return ConstraintAtom("*", None)
    for op in ("==", "!=", ">=", "<=", ">", "<", "^", "~"):
        if text.startswith(op):
            return ConstraintAtom(op, SemVer.parse(text[len(op):]))
    # Bare version means exact match.
    return ConstraintAtom("==", SemVer.parse(text))


def satisfies(version: SemVer, constraint: ConstraintExpr) -> bool:
    """True iff the version satisfies every atom of the constraint."""
    return constraint.satisfied_by(version)
