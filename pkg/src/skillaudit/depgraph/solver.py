"""Deterministic SAT solver: unit propagation, watched literals, and
chronological backtracking.

Branching is fixed -- lowest-numbered unassigned variable, true first --
so identical CNF input always yields the identical assignment.
"""

from __future__ import annotations


def solve(num_vars: int, clauses: list[list[int]]) -> list[bool] | None:
    """Return a complete satisfying assignment (index 1..num_vars) or None.

    The empty formula is satisfiable with the empty assignment.
    """
    working: list[list[int]] = []
    units: list[int] = []
    for clause in clauses:
        lits = sorted(set(clause), key=lambda lit: (abs(lit), -lit))
        if not lits:
            return None
        seen = set(lits)
        if any(-lit in seen for lit in lits):
            continue  # tautology
        if len(lits) == 1:
            units.append(lits[0])
        else:
            working.append(lits)

    assign = [0] * (num_vars + 1)  # 0 unassigned, 1 true, -1 false
    trail: list[tuple[int, bool, bool]] = []  # (var, is_decision, flipped)

    watches: dict[int, list[int]] = {}
    watched: list[list[int]] = []
    for ci, lits in enumerate(working):
        watched.append([lits[0], lits[1]])
        watches.setdefault(lits[0], []).append(ci)
        watches.setdefault(lits[1], []).append(ci)

    def value(lit: int) -> int:
        v = assign[abs(lit)]
        return v if lit > 0 else -v

    def assign_literal(lit: int, is_decision: bool, flipped: bool = False) -> bool:
        """Assign and propagate to fixpoint. False means conflict."""
        pending = [lit]
        first = True
        while pending:
            cur = pending.pop(0)
            v = value(cur)
            if v == 1:
                first = False
                continue
            if v == -1:
                return False
            assign[abs(cur)] = 1 if cur > 0 else -1
            trail.append((abs(cur), is_decision and first, flipped and first))
            first = False
            falsified = -cur
            watchers = watches.get(falsified)
            if not watchers:
                continue
            kept: list[int] = []
            for ci in watchers:
                pair = watched[ci]
                other = pair[0] if pair[1] == falsified else pair[1]
                if value(other) == 1:
                    kept.append(ci)
                    continue
                replacement = 0
                for cand in working[ci]:
                    if cand != other and cand != falsified and value(cand) != -1:
                        replacement = cand
                        break
                if replacement:
                    if pair[0] == falsified:
                        pair[0] = replacement
                    else:
                        pair[1] = replacement
                    watches.setdefault(replacement, []).append(ci)
                    continue
                kept.append(ci)
                if value(other) == -1:
                    watches[falsified] = kept + [
                        c for c in watchers[watchers.index(ci) + 1:]
                    ]
                    return False
                pending.append(other)
            watches[falsified] = kept
        return True

    def backtrack() -> bool:
        """Undo through the most recent unflipped decision and flip it."""
        while trail:
            var, is_decision, flipped = trail.pop()
            assign[var] = 0
            if is_decision and not flipped:
                if assign_literal(-var, is_decision=True, flipped=True):
                    return True
                # flip failed too: keep unwinding
        return False

    for lit in units:
        if not assign_literal(lit, is_decision=False):
            if not backtrack():
                return None

    scan_from = 1
    while True:
        while scan_from <= num_vars and assign[scan_from] != 0:
            scan_from += 1
        if scan_from > num_vars:
            return [v == 1 for v in assign]
        if not assign_literal(scan_from, is_decision=True):
            if not backtrack():
                return None
            scan_from = 1
