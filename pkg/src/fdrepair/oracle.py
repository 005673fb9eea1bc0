"""Subset-query oracles: uniform sampling, membership and cardinality over a
range query's result without materialising it.

Two index structures answer range queries on one attribute:

``DenseIdIndex``
    tuples laid out in attribute order; a range is one contiguous block of
    positions, so every call is constant-time arithmetic.
``CounterTreeIndex``
    a balanced tree over the distinct attribute values with per-key counters
    ``N_less`` / ``N_equal`` and subtree counts; calls walk one root-to-node
    path.

Both order tuples with equal keys by tuple id, so for the same seed they
draw the same tuples.
"""
from __future__ import annotations

import bisect
import csv
import random
from dataclasses import dataclass
from typing import Callable, Iterable, TextIO

from .relation import DataError, Instance


@dataclass(frozen=True)
class RangeQuery:
    attribute: str
    low: str
    high: str

    def bounds(self, instance: Instance) -> tuple:
        instance.schema.position(self.attribute)
        key = instance.sort_key(self.attribute)
        try:
            lo, hi = key(self.low), key(self.high)
        except ValueError:
            raise DataError(f"query bounds {self.low!r}, {self.high!r} are not numeric") from None
        if lo > hi:
            raise DataError(f"query low {self.low!r} exceeds high {self.high!r}")
        return lo, hi


def _keys(instance: Instance, attribute: str) -> list:
    key = instance.sort_key(attribute)
    pos = instance.schema.position(attribute)
    try:
        return [key(row[pos]) for row in instance.rows]
    except ValueError:
        raise DataError(f"attribute {attribute!r} is declared numeric but has non-numeric values") from None


class SubsetOracle:
    """Access to one query result ``Q(I)``.

    ``in_result`` and ``size`` are counted; ``contains`` and ``result_ids``
    are uncounted helpers for ground-truth checks only.
    """

    def __init__(self, seed: int | None = None):
        self._rng = random.Random(seed)
        self.samples = 0
        self.in_result_calls = 0
        self.size_calls = 0
        self.nodes_touched = 0

    def sample_tuple(self) -> int:
        raise NotImplementedError

    def in_result(self, t: int) -> bool:
        raise NotImplementedError

    def size(self) -> int:
        raise NotImplementedError

    def contains(self, t: int) -> bool:
        raise NotImplementedError

    def result_ids(self) -> list[int]:
        raise NotImplementedError

    def member_mask(self, n: int):
        """Boolean numpy mask of length ``n`` over the result; uncounted."""
        import numpy as np

        mask = np.zeros(n, dtype=bool)
        ids = self.result_ids()
        if ids:
            mask[np.asarray(ids, dtype=np.int64)] = True
        return mask

    def reseed(self, seed: int | None) -> None:
        self._rng = random.Random(seed)

    def counters(self) -> dict[str, int]:
        return {"samples": self.samples, "in_result_calls": self.in_result_calls,
                "size_calls": self.size_calls, "nodes_touched": self.nodes_touched}

    def reset_counters(self) -> None:
        self.samples = self.in_result_calls = self.size_calls = self.nodes_touched = 0


class PredicateOracle(SubsetOracle):
    """Oracle over an explicit id set; the reference implementation for tests."""

    def __init__(self, ids: Iterable[int], seed: int | None = None):
        super().__init__(seed)
        self._ids = sorted(set(ids))
        self._members = set(self._ids)

    def sample_tuple(self) -> int:
        if not self._ids:
            raise LookupError("cannot sample from an empty result")
        self.samples += 1
        return self._ids[self._rng.randrange(len(self._ids))]

    def in_result(self, t: int) -> bool:
        self.in_result_calls += 1
        return t in self._members

    def size(self) -> int:
        self.size_calls += 1
        return len(self._ids)

    def contains(self, t: int) -> bool:
        return t in self._members

    def result_ids(self) -> list[int]:
        return list(self._ids)


class FullInstanceOracle(PredicateOracle):
    def __init__(self, instance: Instance, seed: int | None = None):
        super().__init__(instance.ids, seed)


class DenseIdIndex:
    def __init__(self, instance: Instance, attribute: str):
        keys = _keys(instance, attribute)
        self.instance = instance
        self.attribute = attribute
        self.order = sorted(instance.ids, key=lambda t: (keys[t], t))
        self.position = [0] * len(self.order)
        for p, t in enumerate(self.order):
            self.position[t] = p
        self.sorted_keys = [keys[t] for t in self.order]

    def open(self, query: RangeQuery, seed: int | None = None) -> "DenseOracle":
        if query.attribute != self.attribute:
            raise DataError(f"index is on {self.attribute!r}, query is on {query.attribute!r}")
        lo, hi = query.bounds(self.instance)
        start = bisect.bisect_left(self.sorted_keys, lo)
        stop = bisect.bisect_right(self.sorted_keys, hi)
        return DenseOracle(self, start, stop, seed)


class DenseOracle(SubsetOracle):
    def __init__(self, index: DenseIdIndex, start: int, stop: int, seed: int | None):
        super().__init__(seed)
        self.index = index
        self.start = start
        self.stop = stop

    def sample_tuple(self) -> int:
        if self.stop <= self.start:
            raise LookupError("cannot sample from an empty result")
        self.samples += 1
        self.nodes_touched += 1
        return self.index.order[self.start + self._rng.randrange(self.stop - self.start)]

    def in_result(self, t: int) -> bool:
        self.in_result_calls += 1
        self.nodes_touched += 1
        return self.start <= self.index.position[t] < self.stop

    def size(self) -> int:
        self.size_calls += 1
        return self.stop - self.start

    def contains(self, t: int) -> bool:
        return self.start <= self.index.position[t] < self.stop

    def result_ids(self) -> list[int]:
        return sorted(self.index.order[self.start:self.stop])


class CounterTreeIndex:
    """Balanced BST over distinct keys, stored in parallel arrays.

    Node ``v`` holds key ``keys[v]``, its tuples ``buckets[v]`` (ascending
    id), ``n_less[v]`` tuples with a smaller key, ``n_equal[v]`` with this
    key, and ``subtree[v]`` tuples in its subtree.
    """

    def __init__(self, instance: Instance, attribute: str):
        keys = _keys(instance, attribute)
        self.instance = instance
        self.attribute = attribute
        self.n = len(keys)
        self.tuple_key = keys
        groups: dict = {}
        for t in instance.ids:
            groups.setdefault(keys[t], []).append(t)
        self.keys = sorted(groups)
        self.buckets = [groups[k] for k in self.keys]
        self.n_equal = [len(b) for b in self.buckets]
        self.n_less = []
        acc = 0
        for c in self.n_equal:
            self.n_less.append(acc)
            acc += c
        d = len(self.keys)
        self.left = [-1] * d
        self.right = [-1] * d
        self.subtree = [0] * d
        self.root = self._build(0, d)
        self.height = self._height(self.root)

    def _build(self, lo: int, hi: int) -> int:
        if lo >= hi:
            return -1
        mid = (lo + hi) // 2
        self.left[mid] = self._build(lo, mid)
        self.right[mid] = self._build(mid + 1, hi)
        self.subtree[mid] = (self.n_equal[mid]
                             + (self.subtree[self.left[mid]] if self.left[mid] >= 0 else 0)
                             + (self.subtree[self.right[mid]] if self.right[mid] >= 0 else 0))
        return mid

    def _height(self, v: int) -> int:
        if v < 0:
            return 0
        return 1 + max(self._height(self.left[v]), self._height(self.right[v]))

    def _descend(self, go_left: Callable[[int], bool], touch: Callable[[], None]) -> int:
        """Walk to the boundary chosen by ``go_left``; returns the smallest
        node index for which ``go_left`` holds, or ``len(keys)``."""
        v, found = self.root, len(self.keys)
        while v >= 0:
            touch()
            if go_left(v):
                found = v
                v = self.left[v]
            else:
                v = self.right[v]
        return found

    def open(self, query: RangeQuery, seed: int | None = None) -> "CounterTreeOracle":
        if query.attribute != self.attribute:
            raise DataError(f"index is on {self.attribute!r}, query is on {query.attribute!r}")
        lo, hi = query.bounds(self.instance)
        oracle = CounterTreeOracle(self, lo, hi, seed)
        touch = oracle._touch_open
        first = self._descend(lambda v: self.keys[v] >= lo, touch)
        after = self._descend(lambda v: self.keys[v] > hi, touch)
        oracle.begin = self.n_less[first] if first < len(self.keys) else self.n
        if after > 0:
            last = after - 1
            oracle.end = self.n_less[last] + self.n_equal[last]
        else:
            oracle.end = 0
        oracle.end = max(oracle.end, oracle.begin)
        return oracle


class CounterTreeOracle(SubsetOracle):
    def __init__(self, index: CounterTreeIndex, lo, hi, seed: int | None):
        super().__init__(seed)
        self.index = index
        self.lo = lo
        self.hi = hi
        self.begin = 0
        self.end = 0
        self.open_nodes = 0
        self.max_nodes_per_call = 0

    def _touch_open(self) -> None:
        self.open_nodes += 1

    def sample_tuple(self) -> int:
        if self.end <= self.begin:
            raise LookupError("cannot sample from an empty result")
        self.samples += 1
        ix = self.index
        d = self.begin + self._rng.randrange(self.end - self.begin)
        v, touched = ix.root, 0
        while True:
            touched += 1
            lv = ix.left[v]
            lc = ix.subtree[lv] if lv >= 0 else 0
            if d < lc:
                v = lv
            elif d < lc + ix.n_equal[v]:
                break
            else:
                d -= lc + ix.n_equal[v]
                v = ix.right[v]
        self._account(touched)
        return ix.buckets[v][d - lc]

    def _account(self, touched: int) -> None:
        self.nodes_touched += touched
        if touched > self.max_nodes_per_call:
            self.max_nodes_per_call = touched

    def in_result(self, t: int) -> bool:
        self.in_result_calls += 1
        self._account(1)
        return self.lo <= self.index.tuple_key[t] <= self.hi

    def size(self) -> int:
        self.size_calls += 1
        self._account(1)
        return self.end - self.begin

    def contains(self, t: int) -> bool:
        return self.lo <= self.index.tuple_key[t] <= self.hi

    def result_ids(self) -> list[int]:
        return sorted(t for t in range(self.index.n) if self.contains(t))


def build_dense_index(instance: Instance, attribute: str) -> DenseIdIndex:
    return DenseIdIndex(instance, attribute)


def build_counter_index(instance: Instance, attribute: str) -> CounterTreeIndex:
    return CounterTreeIndex(instance, attribute)


def open_oracle(index: DenseIdIndex | CounterTreeIndex, query: RangeQuery,
                seed: int | None = None) -> SubsetOracle:
    return index.open(query, seed)


WORKLOAD_HEADER = ("attribute", "low", "high")


def read_workload(source: TextIO) -> list[RangeQuery]:
    queries = []
    for line, row in enumerate(csv.reader(source), start=1):
        if not row or (line == 1 and tuple(row) == WORKLOAD_HEADER):
            continue
        if len(row) != 3:
            raise DataError(f"workload line {line}: expected attribute,low,high")
        queries.append(RangeQuery(*(v.strip() for v in row)))
    return queries


def write_workload(queries: Iterable[RangeQuery], sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(WORKLOAD_HEADER)
    for q in queries:
        writer.writerow((q.attribute, q.low, q.high))
