"""Sublinear estimation of the FD-inconsistency degree of a query result.

A fixed ranking of the conflicts defines a greedy maximal matching: scan the
conflicts by ascending rank and pick every one whose endpoints are both
still present, deleting both endpoints.  The survivors form a repair ``S``
at most twice the optimal distance away.  ``greedy_repair_scan`` computes it
sequentially; ``LocalEliminator.not_in_sr`` decides ``t not in S`` locally,
exploring only lower-ranked conflicts around ``t``.  ``fast_inc_deg``
samples tuples and counts how many fall outside ``S``.
"""
from __future__ import annotations

import bisect
import csv
import hashlib
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Hashable, Sequence, TextIO

import numpy as np

from .conflicts import ConflictIndex, _index_from_ranks
from .oracle import SubsetOracle
from .relation import FunctionalDependency, Instance


class RecursionCapExceeded(RuntimeError):
    """Eliminate nested deeper than the number of conflicts; ranks are not a total order."""


@dataclass(frozen=True)
class GreedyScanResult:
    repair: frozenset[int]
    picked_conflicts: tuple[int, ...]
    base_size: int

    @property
    def distance(self) -> int:
        return self.base_size - len(self.repair)

    @property
    def degree(self) -> Fraction:
        if not self.base_size:
            return Fraction(0)
        return Fraction(self.distance, self.base_size)


def greedy_repair_scan(index: ConflictIndex, oracle: SubsetOracle | None = None) -> GreedyScanResult:
    """Sequential pick-remove-eliminate over the ranking, restricted to the oracle's result.

    ``picked_conflicts`` holds rank-order positions in ``index``.  Membership
    is read through the oracle's uncounted helpers.
    """
    if oracle is None:
        base = list(range(index.n))
        inside = np.ones(index.n, dtype=bool)
    else:
        base = oracle.result_ids()
        inside = oracle.member_mask(index.n)
    a = np.asarray(index.a, dtype=np.int64)
    b = np.asarray(index.b, dtype=np.int64)
    relevant = np.flatnonzero(inside[a] & inside[b]).tolist() if index.m else []
    dead = set()
    picked = []
    for p in relevant:
        s, t = index.a[p], index.b[p]
        if s in dead or t in dead:
            continue
        picked.append(p)
        dead.add(s)
        dead.add(t)
    return GreedyScanResult(frozenset(base) - dead, tuple(picked), len(base))


class _ConflictSource:
    """What the local oracle needs: rank-sorted incident conflicts per tuple."""

    probe_work = 0

    def incident(self, t: int) -> Sequence[Hashable]:
        raise NotImplementedError

    def lower(self, c: Hashable) -> list[tuple[Hashable, int]]:
        """Conflicts sharing an endpoint with ``c`` and ranked below it, ascending,
        each paired with its endpoint not shared with ``c``."""
        raise NotImplementedError

    def other(self, c: Hashable, t: int) -> int:
        raise NotImplementedError


def _merge_lower(la: Sequence, lb: Sequence, a: int, b: int, other) -> list:
    out = []
    i = j = 0
    while i < len(la) or j < len(lb):
        if j >= len(lb) or (i < len(la) and la[i] < lb[j]):
            c = la[i]
            i += 1
            out.append((c, other(c, a)))
        else:
            c = lb[j]
            j += 1
            out.append((c, other(c, b)))
    return out


class PrebuiltSource(_ConflictSource):
    """Conflicts identified by their position in a ranked ``ConflictIndex``."""

    def __init__(self, index: ConflictIndex):
        self.index = index
        self.probe_work = 0

    def incident(self, t: int) -> list[int]:
        ix = self.index
        self.probe_work += ix.offsets[t + 1] - ix.offsets[t]
        return ix.incident(t)

    def other(self, p: int, t: int) -> int:
        return self.index.a[p] + self.index.b[p] - t

    def lower(self, p: int) -> list[tuple[int, int]]:
        ix = self.index
        a, b = ix.a[p], ix.b[p]
        adj, off = ix.adj, ix.offsets
        ea = bisect.bisect_left(adj, p, off[a], off[a + 1])
        eb = bisect.bisect_left(adj, p, off[b], off[b + 1])
        la = adj[off[a]:ea]
        lb = adj[off[b]:eb]
        self.probe_work += len(la) + len(lb)
        return _merge_lower(la, lb, a, b, self.other)


class LazyRanking:
    """Ranks drawn on demand as a keyed 64-bit hash of the endpoint pair.

    The pair itself breaks hash ties, so ``(hash, a, b)`` is a strict total
    order that stays fixed for the lifetime of the session.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._key = int(seed).to_bytes(16, "little", signed=True)
        self.memo: dict[tuple[int, int], tuple[int, int, int]] = {}

    def __call__(self, s: int, t: int) -> tuple[int, int, int]:
        a, b = (s, t) if s < t else (t, s)
        r = self.memo.get((a, b))
        if r is None:
            h = hashlib.blake2b(f"{a},{b}".encode(), digest_size=8, key=self._key).digest()
            r = (int.from_bytes(h, "big"), a, b)
            self.memo[(a, b)] = r
        return r


class ClassProbe:
    """Per-FD equivalence classes, enough to list a tuple's conflicts on demand."""

    def __init__(self, instance: Instance, fds: Sequence[FunctionalDependency]):
        self.instance = instance
        self.fds = list(fds)
        self.det_of: list[list[int]] = []
        self.dep_of: list[list[int]] = []
        self.members: list[list[list[int]]] = []
        for fd in fds:
            if fd.trivial:
                continue
            xk = instance.key_function(fd.determinant)
            yk = instance.key_function(fd.dependent)
            det_ids: dict = {}
            dep_ids: dict = {}
            det_of, dep_of, members = [], [], []
            for t in instance.ids:
                d = det_ids.setdefault(xk(t), len(det_ids))
                if d == len(members):
                    members.append([])
                members[d].append(t)
                det_of.append(d)
                dep_of.append(dep_ids.setdefault(yk(t), len(dep_ids)))
            self.det_of.append(det_of)
            self.dep_of.append(dep_of)
            self.members.append(members)

    def neighbours(self, t: int) -> tuple[set[int], int]:
        """Tuples in conflict with ``t`` and the number of class entries scanned."""
        out: set[int] = set()
        scanned = 0
        for det_of, dep_of, members in zip(self.det_of, self.dep_of, self.members):
            cls = members[det_of[t]]
            scanned += len(cls)
            if len(cls) < 2:
                continue
            mine = dep_of[t]
            out.update(s for s in cls if dep_of[s] != mine)
        return out, scanned


class OnTheFlySource(_ConflictSource):
    """Conflicts discovered by probing equivalence classes and ranked lazily."""

    def __init__(self, probe: ClassProbe, ranking: LazyRanking):
        self.probe = probe
        self.ranking = ranking
        self.probe_work = 0
        self._incident: dict[int, list[tuple[int, int, int]]] = {}

    def incident(self, t: int) -> list[tuple[int, int, int]]:
        got = self._incident.get(t)
        if got is None:
            nbrs, scanned = self.probe.neighbours(t)
            got = sorted(self.ranking(t, s) for s in nbrs)
            self.probe_work += scanned + len(nbrs)
            self._incident[t] = got
        return got

    def other(self, c: tuple[int, int, int], t: int) -> int:
        return c[1] + c[2] - t

    def lower(self, c: tuple[int, int, int]) -> list[tuple[tuple, int]]:
        _, a, b = c
        ia, ib = self.incident(a), self.incident(b)
        la = ia[:bisect.bisect_left(ia, c)]
        lb = ib[:bisect.bisect_left(ib, c)]
        self.probe_work += len(la) + len(lb)
        return _merge_lower(la, lb, a, b, self.other)


class LocalEliminator:
    """Local membership test for the greedy repair of one query result.

    ``Eliminate(J)`` is true iff ``J`` is picked by the greedy scan: no
    lower-ranked conflict inside the result that shares an endpoint with
    ``J`` is itself picked.  Outcomes are memoised per session unless
    ``memoize=False``.
    """

    def __init__(self, source: _ConflictSource, oracle: SubsetOracle, depth_cap: int | None = None,
                 memoize: bool = True):
        self.source = source
        self.oracle = oracle
        self.memoize = memoize
        self.memo: dict = {}
        self.depth_cap = depth_cap
        self.eliminate_calls = 0
        self.memo_hits = 0
        self.max_depth = 0

    def not_in_sr(self, t: int) -> bool:
        src, oracle = self.source, self.oracle
        for c in src.incident(t):
            if oracle.in_result(src.other(c, t)) and self.eliminate(c):
                return True
        return False

    def eliminate(self, root: Hashable) -> bool:
        memo, use_memo = self.memo, self.memoize
        src, in_result = self.source, self.oracle.in_result
        self.eliminate_calls += 1
        if use_memo and root in memo:
            self.memo_hits += 1
            return memo[root]
        cap = self.depth_cap
        stack = [[root, src.lower(root), 0]]
        child = None
        while stack:
            frame = stack[-1]
            c, lower, i = frame
            if child is not None:
                if child:
                    # A lower neighbour was picked, so c is not.
                    if use_memo:
                        memo[c] = False
                    stack.pop()
                    child = False
                    continue
                i += 1
                child = None
            descended = False
            picked_below = False
            while i < len(lower):
                c2, other = lower[i]
                if in_result(other):
                    self.eliminate_calls += 1
                    hit = memo.get(c2) if use_memo else None
                    if hit is None:
                        frame[2] = i
                        stack.append([c2, src.lower(c2), 0])
                        if len(stack) > self.max_depth:
                            self.max_depth = len(stack)
                            if cap is not None and self.max_depth > cap:
                                raise RecursionCapExceeded(f"Eliminate depth exceeded {cap}")
                        descended = True
                        break
                    self.memo_hits += 1
                    if hit:
                        picked_below = True
                        break
                i += 1
            if descended:
                continue
            value = not picked_below
            if use_memo:
                memo[c] = value
            stack.pop()
            child = value
        return bool(child)


@dataclass
class EstimateReport:
    estimate: float
    eps: float
    samples: int
    dist_tilde: int
    size: int
    eliminate_calls: int
    memo_hits: int
    in_result_calls: int
    probe_work: int
    seed: int | None
    empty: bool = False
    query_id: int | str = 0

    @property
    def work(self) -> int:
        return self.eliminate_calls + self.in_result_calls + self.probe_work


def sample_count(eps: float) -> int:
    """``ceil(8 / eps**2)`` computed on the decimal value of ``eps``."""
    e = Fraction(repr(float(eps)))
    return math.ceil(8 / (e * e))


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 1:
        raise ValueError(f"eps must satisfy 0 < eps <= 1, got {eps}")


def _run(eliminator: LocalEliminator, oracle: SubsetOracle, eps: float, seed: int | None,
         query_id) -> EstimateReport:
    _check_eps(eps)
    if seed is not None:
        oracle.reseed(seed)
    size = oracle.size()
    s = sample_count(eps)
    if size == 0:
        return EstimateReport(0.0, eps, 0, 0, 0, 0, 0, oracle.in_result_calls, 0, seed, True, query_id)
    dist = 0
    for _ in range(s):
        if eliminator.not_in_sr(oracle.sample_tuple()):
            dist += 1
    estimate = min(1.0, dist / s + eps / 2)
    return EstimateReport(estimate, eps, s, dist, size, eliminator.eliminate_calls,
                          eliminator.memo_hits, oracle.in_result_calls,
                          eliminator.source.probe_work, seed, False, query_id)


def fast_inc_deg(index: ConflictIndex, oracle: SubsetOracle, eps: float, seed: int | None = None,
                 query_id=0, memoize: bool = True) -> EstimateReport:
    """Estimate ``incDeg(Q(I))`` from ``ceil(8/eps^2)`` uniform samples.

    Returns ``min(1, dist/samples + eps/2)``; an empty result is reported as
    degree 0 with ``empty=True``.
    """
    eliminator = LocalEliminator(PrebuiltSource(index), oracle, depth_cap=max(index.m, 1),
                                 memoize=memoize)
    return _run(eliminator, oracle, eps, seed, query_id)


def fast_inc_deg_otf(probe: ClassProbe, oracle: SubsetOracle, eps: float, seed: int | None = None,
                     ranking: LazyRanking | int = 0, query_id=0, memoize: bool = True) -> EstimateReport:
    """Same contract as ``fast_inc_deg`` with conflicts found and ranked on demand.

    Pass one ``LazyRanking`` to every query of a session so that ranks stay
    fixed across queries; an int is taken as the ranking seed.
    """
    if not isinstance(ranking, LazyRanking):
        ranking = LazyRanking(ranking)
    eliminator = LocalEliminator(OnTheFlySource(probe, ranking), oracle, memoize=memoize)
    return _run(eliminator, oracle, eps, seed, query_id)


def ranked_by(ranking: LazyRanking, conflicts, n: int) -> ConflictIndex:
    """A prebuilt index whose rank order is the lazy ranking's; used for ground truth."""
    order = sorted(range(len(conflicts)), key=lambda i: ranking(conflicts[i].a, conflicts[i].b))
    ranks = [0] * len(conflicts)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return _index_from_ranks(conflicts, ranks, n)


REPORT_HEADER = ("query_id", "eps", "seed", "estimate", "samples", "dist_tilde",
                 "eliminate_calls", "in_result_calls")


def write_reports(reports: Sequence[EstimateReport], sink: TextIO, header: bool = True) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    if header:
        writer.writerow(REPORT_HEADER)
    for r in reports:
        row = asdict(r)
        writer.writerow([row[k] if k != "seed" or r.seed is not None else "" for k in REPORT_HEADER])
