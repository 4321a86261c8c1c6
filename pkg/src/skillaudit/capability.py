"""Capability lattice: access levels, resource types, and capability sets.

The access chain NONE < READ < WRITE < ADMIN forms a totally ordered
lattice; a capability set maps each of the eight resource types to a
level, i.e. it is an element of the product lattice. Everything here is
an immutable value type, safe to share across threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable, Iterator, Mapping

logger = logging.getLogger(__name__)


class AccessLevel(IntEnum):
    """Totally ordered access chain. Join is max, meet is min."""

    NONE = 0
    READ = 1
    WRITE = 2
    ADMIN = 3

    @classmethod
    def parse(cls, name: str) -> "AccessLevel":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown access level: {name!r}") from None


class ResourceType(str, Enum):
    """The eight resource types a skill can touch."""

    FILESYSTEM = "filesystem"
    NETWORK = "network"
    ENVIRONMENT = "environment"
    SHELL = "shell"
    SKILL_INVOKE = "skill_invoke"
    CLIPBOARD = "clipboard"
    BROWSER = "browser"
    DATABASE = "database"

    @classmethod
    def parse(cls, name: str) -> "ResourceType":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown resource type: {name!r}") from None


RESOURCES: tuple[ResourceType, ...] = tuple(ResourceType)


def join(a: AccessLevel, b: AccessLevel) -> AccessLevel:
    """Least upper bound of two access levels."""
    return AccessLevel(max(a, b))


def meet(a: AccessLevel, b: AccessLevel) -> AccessLevel:
    """Greatest lower bound of two access levels."""
    return AccessLevel(min(a, b))


@dataclass(frozen=True)
class Capability:
    """A (resource, level) pair: the unit of authority."""

    resource: ResourceType
    level: AccessLevel

    def subsumes(self, other: "Capability") -> bool:
        return self.resource == other.resource and other.level <= self.level

    def __str__(self) -> str:
        return f"{self.resource.value}:{self.level.name}"


class CapabilitySet:
    """Total map from resource type to access level; unlisted means NONE.

    Ordered pointwise: A <= B iff A(r) <= B(r) for every resource.
    """

    __slots__ = ("_levels",)

    def __init__(self, levels: Mapping[ResourceType, AccessLevel] | None = None):
        cleaned: dict[ResourceType, AccessLevel] = {}
        for resource, level in (levels or {}).items():
            if not isinstance(resource, ResourceType):
                raise TypeError(f"expected ResourceType key, got {resource!r}")
            level = AccessLevel(level)
            if level is not AccessLevel.NONE:
                cleaned[resource] = level
        self._levels = cleaned

    @classmethod
    def bottom(cls) -> "CapabilitySet":
        return cls()

    @classmethod
    def top(cls) -> "CapabilitySet":
        return cls({r: AccessLevel.ADMIN for r in RESOURCES})

    @classmethod
    def of(cls, **levels: AccessLevel) -> "CapabilitySet":
        """Build from keyword resource names, e.g. of(network=AccessLevel.READ)."""
        return cls({ResourceType.parse(k): v for k, v in levels.items()})

    @classmethod
    def from_capabilities(cls, caps: Iterable[Capability]) -> "CapabilitySet":
        levels: dict[ResourceType, AccessLevel] = {}
        for cap in caps:
            levels[cap.resource] = join(levels.get(cap.resource, AccessLevel.NONE), cap.level)
        return cls(levels)

    def level(self, resource: ResourceType) -> AccessLevel:
        return self._levels.get(resource, AccessLevel.NONE)

    def join(self, other: "CapabilitySet") -> "CapabilitySet":
        levels = dict(self._levels)
        for resource, lvl in other._levels.items():
            levels[resource] = join(levels.get(resource, AccessLevel.NONE), lvl)
        return CapabilitySet(levels)

    def meet(self, other: "CapabilitySet") -> "CapabilitySet":
        levels = {
            resource: meet(self.level(resource), other.level(resource))
            for resource in RESOURCES
        }
        return CapabilitySet(levels)

    def with_capability(self, resource: ResourceType, level: AccessLevel) -> "CapabilitySet":
        """Return a copy raised to at least `level` on `resource`."""
        levels = dict(self._levels)
        levels[resource] = join(levels.get(resource, AccessLevel.NONE), level)
        return CapabilitySet(levels)

    def permits(self, required: Capability) -> bool:
        return required.level <= self.level(required.resource)

    def is_subset_of(self, other: "CapabilitySet") -> bool:
        return all(self.level(r) <= other.level(r) for r in RESOURCES)

    def items(self) -> tuple[tuple[ResourceType, AccessLevel], ...]:
        """Non-NONE entries, sorted by resource value for determinism."""
        return tuple(sorted(self._levels.items(), key=lambda kv: kv[0].value))

    def capabilities(self) -> tuple[Capability, ...]:
        return tuple(Capability(r, lvl) for r, lvl in self.items())

    def as_dict(self) -> dict[str, str]:
        return {r.value: lvl.name for r, lvl in self.items()}

    def __iter__(self) -> Iterator[Capability]:
        return iter(self.capabilities())

    def __bool__(self) -> bool:
        return bool(self._levels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CapabilitySet):
            return NotImplemented
        return self._levels == other._levels

    def __hash__(self) -> int:
        return hash(frozenset(self._levels.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{r.value}:{lvl.name}" for r, lvl in self.items())
        return f"CapabilitySet({{{inner}}})"


def set_join(a: CapabilitySet, b: CapabilitySet) -> CapabilitySet:
    """Pointwise join over all resources."""
    return a.join(b)


def permits(declared: CapabilitySet, required: Capability) -> bool:
    """True iff the declared set covers the required capability."""
    return declared.permits(required)


def is_subset_of(a: CapabilitySet, b: CapabilitySet) -> bool:
    """Pointwise dominance check: a(r) <= b(r) for every resource."""
    return a.is_subset_of(b)


def violations(inferred: CapabilitySet, declared: CapabilitySet) -> frozenset[Capability]:
    """Capabilities where inferred access exceeds the declared level.

    An empty result is equivalent to is_subset_of(inferred, declared).
    """
    return frozenset(
        Capability(r, inferred.level(r))
        for r in RESOURCES
        if inferred.level(r) > declared.level(r)
    )


# Manifest capability strings seen in the wild, normalized to lattice
# elements. Unknown strings map to no capability and are kept verbatim by
# the caller so lockfiles can reproduce the manifest faithfully.
CAPABILITY_ALIASES: dict[str, Capability] = {
    "read_local": Capability(ResourceType.FILESYSTEM, AccessLevel.READ),
    "write_local": Capability(ResourceType.FILESYSTEM, AccessLevel.WRITE),
    "read_env": Capability(ResourceType.ENVIRONMENT, AccessLevel.READ),
    "net_access": Capability(ResourceType.NETWORK, AccessLevel.READ),
    "exec": Capability(ResourceType.SHELL, AccessLevel.WRITE),
    "shell": Capability(ResourceType.SHELL, AccessLevel.WRITE),
    "db_read": Capability(ResourceType.DATABASE, AccessLevel.READ),
    "db_write": Capability(ResourceType.DATABASE, AccessLevel.WRITE),
}


def parse_capability_strings(names: Iterable[str]) -> tuple[CapabilitySet, list[str]]:
    """Map manifest capability strings to a capability set.

    Returns the set plus the list of strings that matched no known alias.
    """
    caps: list[Capability] = []
    unknown: list[str] = []
    for raw in names:
        name = str(raw).strip()
        if not name:
            continue
        alias = CAPABILITY_ALIASES.get(name.lower())
        if alias is None:
            logger.warning("unknown capability string %r: granting nothing", name)
            unknown.append(name)
        else:
            caps.append(alias)
    return CapabilitySet.from_capabilities(caps), unknown
