"""Exact optimal subset repair by branch-and-bound minimum vertex cover.

Only meant for small instances; the general problem is NP-hard.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .conflicts import detect_conflicts
from .relation import FunctionalDependency, Instance


class BudgetExceeded(RuntimeError):
    """The search tree outgrew the node budget."""


@dataclass(frozen=True)
class ExactResult:
    optimal_repair: frozenset[int]
    optimal_distance: int
    node_count: int


def _greedy_matching(adj: dict[int, set[int]]) -> int:
    used = set()
    size = 0
    for u in sorted(adj):
        if u in used:
            continue
        for v in sorted(adj[u]):
            if v not in used:
                used.update((u, v))
                size += 1
                break
    return size


def _remove(adj: dict[int, set[int]], vs: Iterable[int]) -> dict[int, set[int]]:
    gone = set(vs)
    out = {}
    for u, nbrs in adj.items():
        if u in gone:
            continue
        rest = nbrs - gone
        if rest:
            out[u] = rest
    return out


class _Search:
    def __init__(self, budget: int):
        self.budget = budget
        self.nodes = 0

    def solve(self, adj: dict[int, set[int]]) -> set[int]:
        # Upper bound: both ends of a maximal matching.
        best = set()
        for u in sorted(adj):
            if u not in best:
                v = next((w for w in sorted(adj[u]) if w not in best), None)
                if v is not None:
                    best.update((u, v))
        self.best = best
        self._branch(adj, set())
        return self.best

    def _branch(self, adj: dict[int, set[int]], chosen: set[int]) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(f"branch-and-bound exceeded {self.budget} nodes")
        chosen = set(chosen)
        # Degree-one rule: some optimal cover takes the neighbour.
        while True:
            leaf = next((u for u in sorted(adj) if len(adj[u]) == 1), None)
            if leaf is None:
                break
            (v,) = adj[leaf]
            chosen.add(v)
            adj = _remove(adj, (v,))
        if not adj:
            if len(chosen) < len(self.best):
                self.best = chosen
            return
        if len(chosen) + _greedy_matching(adj) >= len(self.best):
            return
        v = min(adj, key=lambda u: (-len(adj[u]), u))
        self._branch(_remove(adj, (v,)), chosen | {v})
        nbrs = adj[v]
        if len(chosen) + len(nbrs) < len(self.best):
            self._branch(_remove(adj, nbrs), chosen | nbrs)


def min_vertex_cover(pairs: Sequence[tuple[int, int]], budget: int = 1_000_000) -> tuple[set[int], int]:
    """Minimum vertex cover of the graph with the given edges; returns ``(cover, nodes)``."""
    adj: dict[int, set[int]] = {}
    for a, b in pairs:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    search = _Search(budget)
    cover: set[int] = set()
    # Components are independent; solve them one at a time.
    seen: set[int] = set()
    for root in sorted(adj):
        if root in seen:
            continue
        comp, stack = {root}, [root]
        while stack:
            for w in adj[stack.pop()]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        cover |= search.solve({u: adj[u] for u in comp})
    return cover, search.nodes


def optimal_s_repair(instance: Instance, fds: Sequence[FunctionalDependency],
                     budget: int = 1_000_000, ids: Iterable[int] | None = None) -> ExactResult:
    members = sorted(instance.ids if ids is None else ids)
    pairs = [(c.a, c.b) for c in detect_conflicts(instance, fds, members)]
    cover, nodes = min_vertex_cover(pairs, budget)
    return ExactResult(frozenset(members) - cover, len(cover), nodes)


def exact_inc_deg(instance: Instance, fds: Sequence[FunctionalDependency],
                  ids: Iterable[int] | None = None, budget: int = 1_000_000) -> Fraction:
    members = sorted(instance.ids if ids is None else ids)
    if not members:
        raise ValueError("inconsistency degree of an empty instance is undefined")
    res = optimal_s_repair(instance, fds, budget, members)
    return Fraction(res.optimal_distance, len(members))
