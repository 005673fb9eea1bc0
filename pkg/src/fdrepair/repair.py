"""LP-based approximate optimal subset repairs.

Three algorithms share the same output type:

* ``baseline_lp_osr``: half-integral vertex-cover LP, then keep the
  half-valued tuples of the consistent class holding the most of them.
* ``te_lp_osr``: remove disjoint single-FD triads first, then run the
  baseline on the rest with a partition of at most ``2**sigma`` classes.
* ``qt_lp_osr``: vertex-cover LP strengthened with one covering constraint
  per determinant class, every positive value rounded up to deletion.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .conflicts import detect_conflicts
from .relation import FunctionalDependency, Instance, partition
from .simplex import CoveringRow, solve_covering_lp
from .vclp import HalfIntegralSolution, solve_vc_lp

log = logging.getLogger(__name__)

HALF = Fraction(1, 2)


class PartitionError(ValueError):
    """A triad survives where the two-class partition needs none."""


@dataclass(frozen=True)
class ConsistentPartition:
    labels: dict[int, int]
    class_count: int

    def members(self, label: int) -> list[int]:
        return sorted(t for t, l in self.labels.items() if l == label)


@dataclass(frozen=True)
class RepairResult:
    repair: frozenset[int]
    deleted: frozenset[int]
    algorithm: str
    guarantee: Fraction
    lp_objective: Fraction | None = None
    details: dict = field(default_factory=dict)

    @property
    def distance(self) -> int:
        return len(self.deleted)


@dataclass(frozen=True)
class QuasiTuranProfile:
    eta: dict[Fraction, Fraction]
    chosen_k: Fraction | None
    chosen_eta: Fraction
    kstar: dict[int, Fraction]

    @property
    def predicted_ratio(self) -> Fraction:
        if self.chosen_k is None:
            return Fraction(2)
        return 2 - self.chosen_eta + self.chosen_eta / self.chosen_k

    def eta_at(self, k) -> Fraction:
        k = Fraction(k)
        if not self.kstar:
            return Fraction(0)
        return Fraction(sum(1 for v in self.kstar.values() if v >= k), len(self.kstar))


def _ids(instance: Instance, ids: Iterable[int] | None) -> list[int]:
    return sorted(instance.ids if ids is None else ids)


def _ratio_from_classes(class_count: int) -> Fraction:
    return max(Fraction(1), 2 - Fraction(2, max(class_count, 1)))


def consistent_partition(instance: Instance, fds: Sequence[FunctionalDependency],
                         mode: str = "full", ids: Iterable[int] | None = None) -> ConsistentPartition:
    """Split the tuples into classes that are each conflict-free.

    ``full`` groups tuples by their values on every attribute any FD
    mentions, then merges groups that have no conflict between them.  ``post_triad`` assumes no determinant class has more than two
    dependent classes and labels each tuple by one bit per FD (bit 0 for the
    dependent class holding the smallest tuple id), so at most ``2**sigma``
    labels appear.
    """
    members = _ids(instance, ids)
    if mode == "full":
        attrs = list(dict.fromkeys(a for fd in fds for a in fd.attributes))
        key = instance.key_function(attrs) if attrs else (lambda t: ())
        first: dict[tuple, int] = {}
        sig = {t: first.setdefault(key(t), len(first)) for t in members}
        # Merge signature classes that never conflict: greedy colouring of
        # the class-level conflict graph in first-seen order.
        clash: dict[int, set[int]] = defaultdict(set)
        for c in detect_conflicts(instance, fds, members):
            clash[sig[c.a]].add(sig[c.b])
            clash[sig[c.b]].add(sig[c.a])
        colour: list[int] = []
        for z in range(len(first)):
            taken = {colour[w] for w in clash[z] if w < z}
            colour.append(next(c for c in range(len(taken) + 1) if c not in taken))
        labels = {t: colour[z] for t, z in sig.items()}
        return ConsistentPartition(labels, len(set(colour)))
    if mode != "post_triad":
        raise ValueError(f"unknown partition mode {mode!r}")
    labels = dict.fromkeys(members, 0)
    for bit, fd in enumerate(fds):
        for x, classes in partition(instance, fd, members).grouped().items():
            if len(classes) > 2:
                raise PartitionError(f"determinant class {x} of {fd} still has a triad")
            if len(classes) == 2:
                second = classes[0] if min(classes[0]) > min(classes[1]) else classes[1]
                for t in second:
                    labels[t] |= 1 << bit
    return ConsistentPartition(labels, len(set(labels.values())))


def _partition_rounding(x: HalfIntegralSolution, part: ConsistentPartition) -> tuple[set[int], int | None]:
    halves: dict[int, int] = defaultdict(int)
    for t, label in part.labels.items():
        if x.doubled[t] == 1:
            halves[label] += 1
    keep = min(halves, key=lambda l: (-halves[l], l)) if halves else None
    deleted = {t for t, label in part.labels.items()
               if x.doubled[t] == 2 or (x.doubled[t] == 1 and label != keep)}
    return deleted, keep


def baseline_lp_osr(instance: Instance, fds: Sequence[FunctionalDependency],
                    ids: Iterable[int] | None = None, mode: str = "full") -> RepairResult:
    members = _ids(instance, ids)
    pairs = [(c.a, c.b) for c in detect_conflicts(instance, fds, members)]
    x = solve_vc_lp(pairs, len(instance))
    part = consistent_partition(instance, fds, mode, members)
    deleted, keep = _partition_rounding(x, part)
    return RepairResult(
        frozenset(members) - deleted, frozenset(deleted), "bl",
        _ratio_from_classes(part.class_count), x.objective,
        {"class_count": part.class_count, "kept_class": keep, "m": len(pairs),
         "halves": x.doubled.count(1)},
    )


def find_disjoint_triads(instance: Instance, fds: Sequence[FunctionalDependency],
                         ids: Iterable[int] | None = None) -> tuple[set[int], list[tuple[int, int, int]]]:
    """Greedily peel single-FD triads until every determinant class has at most
    two non-empty dependent classes.

    Each triad takes the smallest remaining id from each of the three largest
    dependent classes (ties go to the class whose first tuple came first).
    """
    remaining = set(_ids(instance, ids))
    triads: list[tuple[int, int, int]] = []
    for fd in fds:
        if fd.trivial:
            continue
        for classes in partition(instance, fd, sorted(remaining)).grouped().values():
            if len(classes) < 3:
                continue
            pools = [list(reversed(c)) for c in classes]  # pop() yields the smallest id
            while True:
                live = [i for i, p in enumerate(pools) if p]
                if len(live) < 3:
                    break
                live.sort(key=lambda i: (-len(pools[i]), i))
                triad = tuple(sorted(pools[i].pop() for i in live[:3]))
                triads.append(triad)
                remaining.difference_update(triad)
    removed = {t for tri in triads for t in tri}
    return removed, triads


def te_lp_osr(instance: Instance, fds: Sequence[FunctionalDependency],
              ids: Iterable[int] | None = None) -> RepairResult:
    members = _ids(instance, ids)
    removed, triads = find_disjoint_triads(instance, fds, members)
    rest = [t for t in members if t not in removed]
    inner = baseline_lp_osr(instance, fds, rest, mode="post_triad")
    sigma = max(len(fds), 1)
    guarantee = max(Fraction(3, 2), 2 - Fraction(1, 2 ** (sigma - 1)))
    deleted = inner.deleted | removed
    return RepairResult(
        frozenset(members) - deleted, frozenset(deleted), "te", guarantee, inner.lp_objective,
        {"triads": len(triads), "class_count": inner.details["class_count"],
         "halves": inner.details["halves"]},
    )


def quasi_turan_profile(instance: Instance, fds: Sequence[FunctionalDependency],
                        ids: Iterable[int] | None = None) -> QuasiTuranProfile:
    """Per-tuple best quasi-Turán parameter and the ``(k, eta_k)`` pair that
    minimises ``2 - eta_k + eta_k / k`` over ``k >= 2``.

    A determinant class with ``m >= 3`` dependent classes is k-quasi-Turán
    when every dependent class ``q`` has ``|p| - |q| >= k |q|``, i.e. when
    ``k <= (|p| - max|q|) / max|q|``.  Every tuple of the class inherits it.
    """
    members = _ids(instance, ids)
    kstar = dict.fromkeys(members, Fraction(0))
    for fd in fds:
        if fd.trivial:
            continue
        for classes in partition(instance, fd, members).grouped().values():
            if len(classes) < 3:
                continue
            size = sum(len(c) for c in classes)
            biggest = max(len(c) for c in classes)
            k = Fraction(size - biggest, biggest)
            for c in classes:
                for t in c:
                    if k > kstar[t]:
                        kstar[t] = k
    n = len(members)
    candidates = sorted({k for k in kstar.values() if k >= 2})
    eta = {k: Fraction(sum(1 for v in kstar.values() if v >= k), n) for k in candidates}
    if not candidates:
        return QuasiTuranProfile({}, None, Fraction(0), kstar)
    chosen = max(candidates, key=lambda k: (eta[k] * (1 - 1 / k), -k))
    return QuasiTuranProfile(eta, chosen, eta[chosen], kstar)


def strengthened_rows(instance: Instance, fds: Sequence[FunctionalDependency], members: Sequence[int],
                      pairs: Sequence[tuple[int, int]], class_slack: Fraction = Fraction(0)) -> list[CoveringRow]:
    """Edge constraints plus ``sum over [p] >= |[p]| - max|[pq]| - slack`` for
    every determinant class split into two or more dependent classes."""
    rows = [CoveringRow((a, b), Fraction(1)) for a, b in pairs]
    seen = set()
    for fd in fds:
        if fd.trivial:
            continue
        for classes in partition(instance, fd, members).grouped().values():
            if len(classes) < 2:
                continue
            ids = tuple(sorted(t for c in classes for t in c))
            rhs = len(ids) - max(len(c) for c in classes) - class_slack
            if (ids, rhs) not in seen:
                seen.add((ids, rhs))
                rows.append(CoveringRow(ids, rhs))
    return rows


def _components(members: Sequence[int], pairs: Sequence[tuple[int, int]]) -> list[list[int]]:
    parent = {t: t for t in members}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = defaultdict(list)
    for t in members:
        groups[find(t)].append(t)
    return [g for g in groups.values() if len(g) > 1]


def _round_up_to_half(v: Fraction) -> Fraction:
    if v <= 0:
        return Fraction(0)
    return HALF if v <= HALF else Fraction(1)


def qt_lp_osr(instance: Instance, fds: Sequence[FunctionalDependency],
              ids: Iterable[int] | None = None, class_slack: Fraction = Fraction(0)) -> RepairResult:
    members = _ids(instance, ids)
    pairs = [(c.a, c.b) for c in detect_conflicts(instance, fds, members)]
    rows = strengthened_rows(instance, fds, members, pairs, class_slack)
    profile = quasi_turan_profile(instance, fds, members)

    # Class rows never straddle components: a split determinant class is a
    # complete multipartite (hence connected) piece of the conflict graph.
    x: dict[int, Fraction] = dict.fromkeys(members, Fraction(0))
    objective = Fraction(0)
    certified = True
    comp_of = {}
    comps = _components(members, pairs)
    for ci, comp in enumerate(comps):
        for t in comp:
            comp_of[t] = ci
    comp_rows: dict[int, list[CoveringRow]] = defaultdict(list)
    for row in rows:
        comp_rows[comp_of[row.members[0]]].append(row)
    for ci, comp in enumerate(comps):
        local = {t: i for i, t in enumerate(comp)}
        lrows = [CoveringRow(tuple(local[t] for t in r.members), r.rhs) for r in comp_rows[ci]]
        sol = solve_covering_lp(len(comp), lrows, upper=True)
        certified &= sol.exact
        objective += sol.objective
        for t, i in local.items():
            x[t] = sol.x[i]

    half_integral = all(v in (0, HALF, 1) for v in x.values())
    guarantee = profile.predicted_ratio
    if not half_integral:
        odd = sum(1 for v in x.values() if v not in (0, HALF, 1))
        log.warning("strengthened LP vertex is not half-integral (%d values); "
                    "rounding up and downgrading the guarantee to 2", odd)
        guarantee = Fraction(2)
    rounded = {t: _round_up_to_half(v) for t, v in x.items()}
    deleted = {t for t, v in rounded.items() if v > 0}
    return RepairResult(
        frozenset(members) - deleted, frozenset(deleted), "qt", guarantee, objective,
        {"half_integral": half_integral, "certified": certified, "chosen_k": profile.chosen_k,
         "chosen_eta": profile.chosen_eta, "predicted_ratio": profile.predicted_ratio,
         "class_rows": len(rows) - len(pairs), "x": x},
    )
