"""Vertex-cover LP over the conflict graph, solved through the bipartite double cover.

Every tuple ``i`` is split into a left copy ``L_i`` and a right copy ``R_i``;
a conflict ``{i, j}`` becomes the two edges ``L_i-R_j`` and ``L_j-R_i``.  A
minimum vertex cover of that bipartite graph (maximum matching plus König's
construction) halves into an optimal LP solution with values in
``{0, 1/2, 1}``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .conflicts import ConflictIndex

_INF = float("inf")


@dataclass(frozen=True)
class HalfIntegralSolution:
    """LP values stored doubled: ``doubled[i]`` is ``2 * x_i`` in ``{0, 1, 2}``."""

    doubled: tuple[int, ...]

    def __post_init__(self):
        if any(v not in (0, 1, 2) for v in self.doubled):
            raise ValueError("half-integral values must be 0, 1/2 or 1")

    def value(self, i: int) -> Fraction:
        return Fraction(self.doubled[i], 2)

    @property
    def values(self) -> list[Fraction]:
        return [Fraction(v, 2) for v in self.doubled]

    @property
    def objective(self) -> Fraction:
        return Fraction(sum(self.doubled), 2)

    def ids_with(self, doubled_value: int) -> list[int]:
        return [i for i, v in enumerate(self.doubled) if v == doubled_value]

    def is_feasible(self, pairs: Iterable[tuple[int, int]]) -> bool:
        return all(self.doubled[i] + self.doubled[j] >= 2 for i, j in pairs)


def _adjacency(pairs: Iterable[tuple[int, int]], n: int) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    for nbrs in adj:
        nbrs.sort()
    return adj


def hopcroft_karp(adj: list[list[int]], n_right: int) -> tuple[list[int], list[int]]:
    """Maximum matching of a bipartite graph given as left-vertex adjacency.

    Returns ``(pair_left, pair_right)`` with ``-1`` for unmatched vertices.
    """
    n_left = len(adj)
    pair_u = [-1] * n_left
    pair_v = [-1] * n_right
    dist = [_INF] * n_left

    def bfs() -> bool:
        queue = deque()
        for u in range(n_left):
            if pair_u[u] == -1:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = _INF
        found = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = pair_v[v]
                if w == -1:
                    found = True
                elif dist[w] == _INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def augment(root: int, it: list[int]) -> bool:
        stack = [root]
        path: list[int] = []
        while stack:
            u = stack[-1]
            nbrs = adj[u]
            advanced = False
            while it[u] < len(nbrs):
                v = nbrs[it[u]]
                it[u] += 1
                w = pair_v[v]
                if w == -1:
                    path.append(v)
                    for uu, vv in zip(stack, path):
                        pair_u[uu] = vv
                        pair_v[vv] = uu
                    return True
                if dist[w] == dist[u] + 1:
                    path.append(v)
                    stack.append(w)
                    advanced = True
                    break
            if not advanced:
                dist[u] = _INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        it = [0] * n_left
        for u in range(n_left):
            if pair_u[u] == -1:
                augment(u, it)
    return pair_u, pair_v


def konig_cover(adj: list[list[int]], pair_u: list[int], pair_v: list[int]) -> tuple[list[bool], list[bool]]:
    """Minimum vertex cover from a maximum matching: ``(L \\ Z) + (R & Z)``."""
    n_left, n_right = len(pair_u), len(pair_v)
    seen_l = [False] * n_left
    seen_r = [False] * n_right
    queue = deque(u for u in range(n_left) if pair_u[u] == -1)
    for u in queue:
        seen_l[u] = True
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if seen_r[v]:
                continue
            seen_r[v] = True
            w = pair_v[v]
            if w != -1 and not seen_l[w]:
                seen_l[w] = True
                queue.append(w)
    return [not s for s in seen_l], seen_r


def solve_vc_lp(conflicts: ConflictIndex | Iterable[tuple[int, int]], n: int) -> HalfIntegralSolution:
    """Optimal half-integral solution of ``min sum x`` s.t. ``x_i + x_j >= 1`` per conflict."""
    pairs = conflicts.pairs() if isinstance(conflicts, ConflictIndex) else list(conflicts)
    adj = _adjacency(pairs, n)
    pair_u, pair_v = hopcroft_karp(adj, n)
    left, right = konig_cover(adj, pair_u, pair_v)
    return HalfIntegralSolution(tuple(int(l) + int(r) for l, r in zip(left, right)))
