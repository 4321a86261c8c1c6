"""skillaudit: static security auditing for agent-skill supply chains.

Parses skill manifests (Claude Markdown, MCP JSON, OpenClaw YAML), infers
capabilities over a product lattice, detects threat patterns and data
flows, resolves dependency graphs under capability bounds with a SAT
encoding, scores trust, and emits deterministic lockfiles and SBOMs.
"""

__version__ = "0.1.0"

TOOL_NAME = "skillaudit"
