"""Schemas, functional dependencies, instances and equivalence classes.

Tuples are identified by their 0-based insertion order, never by content, so
two identical rows are two distinct tuples.  Attribute values are compared as
strings after stripping surrounding whitespace.
"""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

NUMERIC_DIRECTIVE = "#numeric:"


class FDError(ValueError):
    """Malformed FD text or an FD that does not fit the schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataError(ValueError):
    """Malformed dataset (ragged rows, duplicate attributes, unknown ids)."""


@dataclass(frozen=True)
class Schema:
    name: str
    attributes: tuple[str, ...]

    def __post_init__(self):
        if not self.attributes:
            raise DataError("schema needs at least one attribute")
        if any(not a for a in self.attributes):
            raise DataError("attribute names must be non-empty")
        if len(set(self.attributes)) != len(self.attributes):
            raise DataError(f"duplicate attribute names in {self.attributes}")

    def position(self, attribute: str) -> int:
        try:
            return self.attributes.index(attribute)
        except ValueError:
            raise FDError(f"unknown attribute {attribute!r}") from None


@dataclass(frozen=True)
class FunctionalDependency:
    determinant: tuple[str, ...]
    dependent: tuple[str, ...]

    def __post_init__(self):
        if not self.determinant or not self.dependent:
            raise FDError("both sides of an FD must be non-empty")

    @property
    def trivial(self) -> bool:
        return set(self.dependent) <= set(self.determinant)

    @property
    def attributes(self) -> tuple[str, ...]:
        seen = dict.fromkeys(self.determinant + self.dependent)
        return tuple(seen)

    def validate(self, schema: Schema) -> None:
        for a in self.determinant + self.dependent:
            schema.position(a)

    def __str__(self):
        return f"{','.join(self.determinant)} -> {','.join(self.dependent)}"


def _split_side(text: str, line: int) -> tuple[str, ...]:
    names = [p.strip() for p in text.split(",")]
    if not text.strip() or any(not n for n in names):
        raise FDError("empty attribute list", line)
    return tuple(dict.fromkeys(names))


def parse_fd_set(text: str, schema: Schema | None = None) -> list[FunctionalDependency]:
    """Parse one ``X1,X2 -> Y1,Y2`` FD per line.

    Blank lines and lines starting with ``#`` are skipped.  When ``schema`` is
    given every attribute must belong to it.
    """
    fds = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.count("->") != 1:
            raise FDError(f"expected exactly one '->' in {line!r}", lineno)
        left, right = line.split("->")
        fd = FunctionalDependency(_split_side(left, lineno), _split_side(right, lineno))
        if schema is not None:
            try:
                fd.validate(schema)
            except FDError as exc:
                raise FDError(str(exc), lineno) from None
        fds.append(fd)
    return fds


def format_fd_set(fds: Iterable[FunctionalDependency]) -> str:
    return "".join(f"{fd}\n" for fd in fds)


@dataclass(frozen=True)
class Instance:
    """An ordered table of string rows; tuple ``i`` is ``rows[i]``."""

    schema: Schema
    rows: tuple[tuple[str, ...], ...]
    numeric: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        k = len(self.schema.attributes)
        for i, row in enumerate(self.rows):
            if len(row) != k:
                raise DataError(f"tuple {i} has {len(row)} values, schema has {k}")
        for a in self.numeric:
            self.schema.position(a)

    @classmethod
    def from_rows(cls, attributes: Sequence[str], rows: Iterable[Sequence[str]],
                  name: str = "R", numeric: Iterable[str] = ()) -> "Instance":
        schema = Schema(name, tuple(a.strip() for a in attributes))
        clean = tuple(tuple(str(v).strip() for v in row) for row in rows)
        return cls(schema, clean, frozenset(numeric))

    def __len__(self):
        return len(self.rows)

    @property
    def ids(self) -> range:
        return range(len(self.rows))

    def value(self, tid: int, attribute: str) -> str:
        return self.rows[tid][self.schema.position(attribute)]

    def key_function(self, attributes: Sequence[str]):
        """Return ``tid -> tuple of values`` for the given attributes.

        Tuples of strings are unambiguous dict keys, so multi-attribute
        determinants cannot collide the way naive string joins can.
        """
        pos = [self.schema.position(a) for a in attributes]
        rows = self.rows
        if len(pos) == 1:
            p = pos[0]
            return lambda tid: (rows[tid][p],)
        return lambda tid: tuple(rows[tid][p] for p in pos)

    def sort_key(self, attribute: str):
        """Ordering key for one attribute: float if declared numeric."""
        if attribute in self.numeric:
            return float
        return str


def read_csv(source: str | TextIO, name: str = "R") -> Instance:
    """Read a dataset: optional ``#numeric:A,B`` line, header, then rows."""
    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_csv(fh, name)
    text = source.read()
    numeric: list[str] = []
    lines = text.splitlines(keepends=True)
    if lines and lines[0].startswith(NUMERIC_DIRECTIVE):
        numeric = [a.strip() for a in lines[0][len(NUMERIC_DIRECTIVE):].split(",") if a.strip()]
        text = "".join(lines[1:])
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("dataset has no header row") from None
    rows = [r for r in reader if r]
    return Instance.from_rows(header, rows, name=name, numeric=numeric)


def write_csv(instance: Instance, sink: str | TextIO) -> None:
    if isinstance(sink, str):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            write_csv(instance, fh)
            return
    if instance.numeric:
        ordered = [a for a in instance.schema.attributes if a in instance.numeric]
        sink.write(NUMERIC_DIRECTIVE + ",".join(ordered) + "\n")
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(instance.schema.attributes)
    writer.writerows(instance.rows)


@dataclass(frozen=True)
class ClassPartition:
    """Determinant classes ``[p]`` and determinant-dependent classes ``[pq]``.

    ``dependent_classes`` is keyed by ``(x_value, y_value)`` so every
    dependent class sits inside exactly one determinant class.
    """

    fd: FunctionalDependency
    determinant_classes: dict[tuple, tuple[int, ...]]
    dependent_classes: dict[tuple, tuple[int, ...]]

    def dependent_classes_of(self, x_value: tuple) -> list[tuple[int, ...]]:
        return [ids for (x, _), ids in self.dependent_classes.items() if x == x_value]

    def grouped(self) -> dict[tuple, list[tuple[int, ...]]]:
        """Map each determinant value to its dependent classes, in first-seen order."""
        out: dict[tuple, list[tuple[int, ...]]] = defaultdict(list)
        for (x, _), ids in self.dependent_classes.items():
            out[x].append(ids)
        return dict(out)


def partition(instance: Instance, fd: FunctionalDependency,
              ids: Iterable[int] | None = None) -> ClassPartition:
    fd.validate(instance.schema)
    xkey = instance.key_function(fd.determinant)
    ykey = instance.key_function(fd.dependent)
    det: dict[tuple, list[int]] = defaultdict(list)
    dep: dict[tuple, list[int]] = defaultdict(list)
    for tid in (instance.ids if ids is None else ids):
        x = xkey(tid)
        det[x].append(tid)
        dep[(x, ykey(tid))].append(tid)
    return ClassPartition(
        fd,
        {k: tuple(v) for k, v in det.items()},
        {k: tuple(v) for k, v in dep.items()},
    )


def _check_ids(subset: Iterable[int], instance: Instance) -> list[int]:
    ids = list(subset)
    n = len(instance)
    for t in ids:
        if not 0 <= t < n:
            raise DataError(f"unknown tuple id {t}")
    return ids


def is_consistent(subset: Iterable[int], instance: Instance,
                  fds: Sequence[FunctionalDependency]) -> bool:
    ids = _check_ids(subset, instance)
    for fd in fds:
        if fd.trivial:
            continue
        xkey = instance.key_function(fd.determinant)
        ykey = instance.key_function(fd.dependent)
        seen: dict[tuple, tuple] = {}
        for t in ids:
            y = ykey(t)
            if seen.setdefault(xkey(t), y) != y:
                return False
    return True


def dist_sub(subset: Iterable[int], instance: Instance) -> int:
    ids = set(_check_ids(subset, instance))
    return len(instance) - len(ids)


def inc_deg(subset_repair: Iterable[int], base: Iterable[int]) -> Fraction:
    """Deletion distance of ``subset_repair`` relative to ``base`` as an exact ratio."""
    base = set(base)
    repair = set(subset_repair)
    if not base:
        raise ValueError("inconsistency degree of an empty base is undefined")
    if not repair <= base:
        raise DataError("repair is not a subset of the base")
    return Fraction(len(base) - len(repair), len(base))
