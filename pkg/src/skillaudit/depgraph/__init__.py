"""Dependency graph, SAT encoding, deterministic solving, and resolution."""

from .graph import (
    DependencyGraph,
    GraphDiagnostic,
    Installation,
    detect_cycles,
    load_graph_manifest,
)
from .encoding import CNF, Encoding, encode
from .solver import solve
from .resolve import (
    ResolutionDiagnostic,
    affected,
    resolve,
    scalability_bench,
    verify_installation,
)

__all__ = [
    "DependencyGraph",
    "GraphDiagnostic",
    "Installation",
    "detect_cycles",
    "load_graph_manifest",
    "CNF",
    "Encoding",
    "encode",
    "solve",
    "ResolutionDiagnostic",
    "affected",
    "resolve",
    "scalability_bench",
    "verify_installation",
]
