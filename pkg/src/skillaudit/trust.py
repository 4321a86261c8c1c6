"""Trust scoring: four weighted signals, weakest-link propagation over the
dependency DAG, exponential decay, and graduated assurance levels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .analyzer import AnalysisReport, AnalysisStatus
from .patterns import Severity

_WEIGHT_TOLERANCE = 1e-9


class WeightSumError(ValueError):
    """Trust weights must be non-negative and sum to one."""


class CycleError(ValueError):
    """Effective trust is undefined on cyclic dependency projections."""


def _check_unit(value: float, what: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{what} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class TrustSignals:
    provenance: float
    behavioral: float
    community: float
    historical: float

    def __post_init__(self) -> None:
        for name in ("provenance", "behavioral", "community", "historical"):
            _check_unit(getattr(self, name), name)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.provenance, self.behavioral, self.community, self.historical)


@dataclass(frozen=True)
class TrustWeights:
    provenance: float
    behavioral: float
    community: float
    historical: float

    def __post_init__(self) -> None:
        values = self.as_tuple()
        if any(w < 0 for w in values):
            raise WeightSumError(f"weights must be non-negative, got {values}")
        if abs(sum(values) - 1.0) > _WEIGHT_TOLERANCE:
            raise WeightSumError(f"weights must sum to 1, got {sum(values)!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.provenance, self.behavioral, self.community, self.historical)


DEFAULT_WEIGHTS = TrustWeights(0.3, 0.3, 0.2, 0.2)

# Decay rate presets (per day). Trust halves every ln(2)/rate days.
DEFAULT_DECAY_RATE = 0.01
SLOW_DECAY_RATE = 0.005


class TrustLevel(Enum):
    L0_UNSIGNED = ("L0", "unsigned")
    L1_SIGNED = ("L1", "signed")
    L2_COMMUNITY_VERIFIED = ("L2", "community_verified")
    L3_FORMALLY_VERIFIED = ("L3", "formally_verified")

    @property
    def code(self) -> str:
        return self.value[0]

    @property
    def label(self) -> str:
        return self.value[1]


def intrinsic(signals: TrustSignals, weights: TrustWeights = DEFAULT_WEIGHTS) -> float:
    """Weighted linear combination of the four signals; always in [0, 1]."""
    s = signals.as_tuple()
    w = weights.as_tuple()
    score = sum(wi * si for wi, si in zip(w, s))
    return min(1.0, max(0.0, score))


def signals_from_report(
    report: AnalysisReport,
    external: Mapping[str, float] | None = None,
) -> TrustSignals:
    """Derive the behavioral signal from an analysis report.

    Clean reports score 1.0; capability violations or high-severity
    findings score 0.0; warning-only reports sit at the 0.5 midpoint.
    Provenance, community, and historical values come from the external
    record when supplied and default to zero (fail closed).
    """
    if report.status is AnalysisStatus.CLEAN:
        behavioral = 1.0
    elif report.capability_violations or report.max_severity >= Severity.HIGH:
        behavioral = 0.0
    else:
        behavioral = 0.5
    external = external or {}
    return TrustSignals(
        provenance=_check_unit(external.get("provenance", 0.0), "provenance"),
        behavioral=behavioral,
        community=_check_unit(external.get("community", 0.0), "community"),
        historical=_check_unit(external.get("historical", 0.0), "historical"),
    )


def transitive_dependencies(
    dependencies: Mapping[str, Iterable[str]], start: str
) -> set[str]:
    """All skills reachable from `start`, deduplicated; raises on cycles."""
    visited: set[str] = set()
    in_progress: set[str] = set()

    def walk(node: str) -> None:
        in_progress.add(node)
        for child in dependencies.get(node, ()):
            if child in in_progress:
                raise CycleError(f"dependency cycle through {child!r}")
            if child not in visited:
                visited.add(child)
                walk(child)
        in_progress.discard(node)

    walk(start)
    visited.discard(start)
    return visited


def effective(
    dependencies: Mapping[str, Iterable[str]],
    intrinsics: Mapping[str, float],
    skill: str,
) -> float:
    """Intrinsic score times the minimum intrinsic over the transitive
    dependency set. Equal to the intrinsic score for leaf skills, and
    independent of edge enumeration order."""
    own = _check_unit(intrinsics[skill], f"intrinsic({skill})")
    trans = transitive_dependencies(dependencies, skill)
    if not trans:
        return own
    weakest = min(_check_unit(intrinsics[d], f"intrinsic({d})") for d in trans)
    return own * weakest


def decay(t0: float, rate: float, elapsed_days: float) -> float:
    """Exponential attenuation: t0 * exp(-rate * elapsed_days)."""
    _check_unit(t0, "t0")
    if rate <= 0:
        raise ValueError(f"decay rate must be positive, got {rate}")
    if elapsed_days < 0:
        raise ValueError(f"elapsed days must be non-negative, got {elapsed_days}")
    return t0 * math.exp(-rate * elapsed_days)


def half_life(rate: float) -> float:
    return math.log(2) / rate


def level(score: float) -> TrustLevel:
    """Map a score to its assurance level at thresholds 0.25 / 0.50 / 0.75."""
    _check_unit(score, "score")
    if score < 0.25:
        return TrustLevel.L0_UNSIGNED
    if score < 0.50:
        return TrustLevel.L1_SIGNED
    if score < 0.75:
        return TrustLevel.L2_COMMUNITY_VERIFIED
    return TrustLevel.L3_FORMALLY_VERIFIED


def update_signals(
    signals: TrustSignals, delta: tuple[float, float, float, float]
) -> TrustSignals:
    """Apply a per-component delta, clamping each signal into [0, 1]."""
    updated = [
        min(1.0, max(0.0, s + d)) for s, d in zip(signals.as_tuple(), delta)
    ]
    return TrustSignals(*updated)
