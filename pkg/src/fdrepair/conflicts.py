"""Conflict detection, unique ranking and rank-sorted adjacency."""
from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence, TextIO

import numpy as np

from .relation import DataError, FunctionalDependency, Instance, partition


@dataclass(frozen=True)
class Conflict:
    a: int
    b: int
    witnesses: frozenset[int]
    rank: int = 0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"conflict endpoints must satisfy a < b, got {self.a}, {self.b}")
        if not self.witnesses:
            raise ValueError("a conflict needs at least one witnessing FD")


def _collect(pairs: dict[tuple[int, int], set[int]]) -> list[Conflict]:
    return [Conflict(a, b, frozenset(w)) for (a, b), w in sorted(pairs.items())]


def detect_conflicts(instance: Instance, fds: Sequence[FunctionalDependency],
                     ids: Iterable[int] | None = None, naive: bool = False) -> list[Conflict]:
    """All tuple pairs violating at least one FD, sorted by ``(a, b)``.

    The default path hash-partitions on each determinant and only pairs up
    tuples from different dependent classes of the same determinant class.
    ``naive=True`` runs the quadratic reference scan instead.
    """
    if naive:
        return detect_conflicts_naive(instance, fds, ids)
    pairs: dict[tuple[int, int], set[int]] = defaultdict(set)
    for f, fd in enumerate(fds):
        if fd.trivial:
            continue
        for classes in partition(instance, fd, ids).grouped().values():
            if len(classes) < 2:
                continue
            for left, right in combinations(classes, 2):
                for s in left:
                    for t in right:
                        pairs[(s, t) if s < t else (t, s)].add(f)
    return _collect(pairs)


def detect_conflicts_naive(instance: Instance, fds: Sequence[FunctionalDependency],
                           ids: Iterable[int] | None = None) -> list[Conflict]:
    ids = sorted(instance.ids if ids is None else ids)
    keys = [(instance.key_function(fd.determinant), instance.key_function(fd.dependent))
            for fd in fds]
    pairs: dict[tuple[int, int], set[int]] = defaultdict(set)
    for i, s in enumerate(ids):
        for t in ids[i + 1:]:
            for f, (xk, yk) in enumerate(keys):
                if xk(s) == xk(t) and yk(s) != yk(t):
                    pairs[(s, t)].add(f)
    return _collect(pairs)


class ConflictIndex:
    """Conflicts sorted by rank plus per-tuple adjacency in CSR layout.

    Conflict ``p`` (its position in rank order) has endpoints ``a[p] < b[p]``.
    ``adj[offsets[t]:offsets[t + 1]]`` lists the positions of the conflicts
    containing ``t``; since positions follow rank, each slice is strictly
    increasing in rank.
    """

    def __init__(self, n: int, a: Sequence[int], b: Sequence[int], rank: Sequence[int],
                 witnesses: Sequence[frozenset[int]]):
        self.n = n
        self.a = list(a)
        self.b = list(b)
        self.rank = list(rank)
        self.witnesses = list(witnesses)
        m = len(self.a)
        ends = np.concatenate([np.asarray(self.a, dtype=np.int64),
                               np.asarray(self.b, dtype=np.int64)])
        pos = np.concatenate([np.arange(m, dtype=np.int64)] * 2)
        order = np.lexsort((pos, ends))
        counts = np.bincount(ends, minlength=n) if m else np.zeros(n, dtype=np.int64)
        self.offsets = [0] + np.cumsum(counts).tolist()
        self.adj = pos[order].tolist()
        self.delta = counts.tolist()

    @property
    def m(self) -> int:
        return len(self.a)

    @property
    def delta_max(self) -> int:
        return max(self.delta, default=0)

    def __len__(self):
        return self.m

    def incident(self, t: int) -> list[int]:
        return self.adj[self.offsets[t]:self.offsets[t + 1]]

    def other(self, p: int, t: int) -> int:
        return self.a[p] + self.b[p] - t

    def conflicts(self) -> list[Conflict]:
        return [Conflict(a, b, w, r)
                for a, b, w, r in zip(self.a, self.b, self.witnesses, self.rank)]

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.a, self.b))


def assign_ranking(conflicts: Sequence[Conflict], seed: int | None = None, n: int | None = None,
                   lexicographic: bool = False) -> ConflictIndex:
    """Give every conflict a distinct rank in ``1..m`` and build the index.

    Ranks are a Fisher-Yates permutation drawn from a PCG64 stream seeded
    with ``seed``.  ``lexicographic=True`` ranks conflicts in ``(a, b)``
    order instead, which is handy for hand-traceable examples.
    """
    m = len(conflicts)
    if n is None:
        n = max((c.b for c in conflicts), default=-1) + 1
    if lexicographic:
        order = sorted(range(m), key=lambda i: (conflicts[i].a, conflicts[i].b))
        ranks = [0] * m
        for r, i in enumerate(order, start=1):
            ranks[i] = r
    else:
        if seed is None:
            raise ValueError("a seed is required for a random ranking")
        ranks = (np.random.default_rng(seed).permutation(m) + 1).tolist()
    return _index_from_ranks(conflicts, ranks, n)


def _index_from_ranks(conflicts: Sequence[Conflict], ranks: Sequence[int], n: int) -> ConflictIndex:
    if len(set(ranks)) != len(ranks):
        raise DataError("conflict ranks must be unique")
    order = sorted(range(len(conflicts)), key=ranks.__getitem__)
    return ConflictIndex(
        n,
        [conflicts[i].a for i in order],
        [conflicts[i].b for i in order],
        [ranks[i] for i in order],
        [conflicts[i].witnesses for i in order],
    )


def build_index(instance: Instance, fds: Sequence[FunctionalDependency], seed: int | None = None,
                lexicographic: bool = False, naive: bool = False) -> ConflictIndex:
    """Preprocessing: detect every conflict and rank them."""
    found = detect_conflicts(instance, fds, naive=naive)
    return assign_ranking(found, seed, n=len(instance), lexicographic=lexicographic)


def delta_stats(index: ConflictIndex) -> tuple[int, dict[int, int]]:
    """``(delta_max, {conflict count: number of tuples with that count})``."""
    return index.delta_max, dict(sorted(Counter(index.delta).items()))


DUMP_HEADER = ("rank", "a", "b", "fd_ids")


def dump_conflicts(index: ConflictIndex, sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(DUMP_HEADER)
    for a, b, w, r in zip(index.a, index.b, index.witnesses, index.rank):
        writer.writerow((r, a, b, ";".join(map(str, sorted(w)))))


def load_conflicts(source: TextIO, n: int) -> ConflictIndex:
    reader = csv.reader(source)
    header = next(reader, None)
    if tuple(header or ()) != DUMP_HEADER:
        raise DataError(f"conflict dump must start with {','.join(DUMP_HEADER)}")
    conflicts, ranks = [], []
    for line, row in enumerate(reader, start=2):
        try:
            r, a, b, w = row
            conflicts.append(Conflict(int(a), int(b), frozenset(int(x) for x in w.split(";"))))
            ranks.append(int(r))
        except ValueError as exc:
            raise DataError(f"bad conflict dump row {line}: {exc}") from None
    if conflicts and max(c.b for c in conflicts) >= n:
        raise DataError("conflict dump references tuples beyond the instance")
    return _index_from_ranks(conflicts, ranks, n)
