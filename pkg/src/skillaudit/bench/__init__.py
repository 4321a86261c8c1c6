"""Benchmark corpus generation and evaluation harness."""

from .generator import BenchSpec, default_attack_counts, generate
from .evaluate import EvalResult, ablate, evaluate, wilson

__all__ = [
    "BenchSpec",
    "default_attack_counts",
    "generate",
    "EvalResult",
    "ablate",
    "evaluate",
    "wilson",
]
