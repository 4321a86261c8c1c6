"""Corpus evaluation: confusion matrix, per-format and per-attack rates,
Wilson intervals, and the pattern-vs-flow ablation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..analyzer import analyze
from ..patterns import Severity
from ..skillmodel import parse_file

DEFAULT_MANIFEST = "manifest.json"


def wilson(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Stays valid at the extremes (0 or n successes), unlike the normal
    approximation.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0 <= successes <= n:
        raise ValueError(f"successes {successes} out of range for n={n}")
    if z == 0:
        p = successes / n
        return (p, p)
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    radius = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return (max(0.0, center - radius), min(1.0, center + radius))


@dataclass
class EvalResult:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    accuracy: float = 0.0
    per_format: dict[str, dict] = field(default_factory=dict)
    per_attack: dict[str, dict] = field(default_factory=dict)
    wilson_intervals: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "f1": round(self.f1, 6),
            "accuracy": round(self.accuracy, 6),
            "per_format": self.per_format,
            "per_attack": self.per_attack,
            "wilson_intervals": {
                k: [round(lo, 6), round(hi, 6)]
                for k, (lo, hi) in self.wilson_intervals.items()
            },
        }


def _load_manifest(corpus_dir: Path, manifest_path: str | Path | None) -> dict:
    path = Path(manifest_path) if manifest_path else corpus_dir / DEFAULT_MANIFEST
    return json.loads(path.read_text(encoding="utf-8"))


def _skill_for_entry(corpus_dir: Path, entry: dict):
    skills = parse_file(corpus_dir / entry["path"], root=corpus_dir)
    if len(skills) == 1:
        return skills[0]
    for skill in skills:
        if skill.name == entry["name"]:
            return skill
    raise ValueError(f"no skill named {entry['name']!r} in {entry['path']}")


def _classified_malicious(skill, *, include_flows: bool, threshold: Severity) -> bool:
    report = analyze(skill, include_flows=include_flows)
    return report.max_severity >= threshold


def evaluate(
    corpus_dir: str | Path,
    manifest_path: str | Path | None = None,
    *,
    include_flows: bool = True,
    threshold: Severity = Severity.MEDIUM,
) -> EvalResult:
    """Analyze every corpus entry and score against the ground truth."""
    corpus = Path(corpus_dir)
    manifest = _load_manifest(corpus, manifest_path)
    result = EvalResult()
    fmt_counts: dict[str, dict[str, int]] = {}
    attack_counts: dict[str, dict[str, int]] = {}

    for entry in manifest["entries"]:
        skill = _skill_for_entry(corpus, entry)
        predicted = _classified_malicious(
            skill, include_flows=include_flows, threshold=threshold
        )
        actual = entry["label"] == "malicious"
        fmt = entry["format"]
        fstats = fmt_counts.setdefault(fmt, {"tp": 0, "fp": 0, "tn": 0, "fn": 0})
        if actual and predicted:
            result.tp += 1
            fstats["tp"] += 1
        elif actual and not predicted:
            result.fn += 1
            fstats["fn"] += 1
        elif not actual and predicted:
            result.fp += 1
            fstats["fp"] += 1
        else:
            result.tn += 1
            fstats["tn"] += 1
        if actual:
            astats = attack_counts.setdefault(
                entry["attack_type"], {"detected": 0, "total": 0}
            )
            astats["total"] += 1
            if predicted:
                astats["detected"] += 1

    positives = result.tp + result.fp
    malicious = result.tp + result.fn
    benign = result.tn + result.fp
    total = malicious + benign
    result.precision = result.tp / positives if positives else 0.0
    result.recall = result.tp / malicious if malicious else 0.0
    result.f1 = (
        2 * result.precision * result.recall / (result.precision + result.recall)
        if (result.precision + result.recall) > 0
        else 0.0
    )
    result.accuracy = (result.tp + result.tn) / total if total else 0.0

    for fmt, st in sorted(fmt_counts.items()):
        m = st["tp"] + st["fn"]
        p = st["tp"] + st["fp"]
        st_out = dict(st)
        st_out["recall"] = st["tp"] / m if m else 0.0
        st_out["precision"] = st["tp"] / p if p else 0.0
        result.per_format[fmt] = st_out
    for attack, st in sorted(attack_counts.items()):
        result.per_attack[attack] = {
            "detected": st["detected"],
            "total": st["total"],
            "rate": st["detected"] / st["total"] if st["total"] else 0.0,
        }

    if malicious:
        result.wilson_intervals["recall"] = wilson(result.tp, malicious)
    if positives:
        result.wilson_intervals["precision"] = wilson(result.tp, positives)
    if benign:
        result.wilson_intervals["fp_rate"] = wilson(result.fp, benign)
    return result


def ablate(
    corpus_dir: str | Path,
    manifest_path: str | Path | None = None,
    *,
    threshold: Severity = Severity.MEDIUM,
) -> dict:
    """Compare pattern-only detection against pattern + information flow."""
    corpus = Path(corpus_dir)
    manifest = _load_manifest(corpus, manifest_path)
    pattern_only = 0
    flow_added = 0
    undetected = 0
    flow_added_by_type: dict[str, int] = {}
    benign_flagged_pattern = 0
    benign_flagged_flows = 0

    for entry in manifest["entries"]:
        skill = _skill_for_entry(corpus, entry)
        detected_pattern = _classified_malicious(
            skill, include_flows=False, threshold=threshold
        )
        if entry["label"] == "benign":
            if detected_pattern:
                benign_flagged_pattern += 1
            if _classified_malicious(skill, include_flows=True, threshold=threshold):
                benign_flagged_flows += 1
            continue
        if detected_pattern:
            pattern_only += 1
            continue
        if _classified_malicious(skill, include_flows=True, threshold=threshold):
            flow_added += 1
            attack = entry["attack_type"]
            flow_added_by_type[attack] = flow_added_by_type.get(attack, 0) + 1
        else:
            undetected += 1

    return {
        "pattern_only": pattern_only,
        "flow_added": flow_added,
        "flow_added_by_type": dict(sorted(flow_added_by_type.items())),
        "undetected": undetected,
        "total_detected": pattern_only + flow_added,
        "benign_flagged_pattern_only": benign_flagged_pattern,
        "benign_flagged_with_flows": benign_flagged_flows,
    }
