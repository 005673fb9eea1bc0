"""Synthetic dirty data: a consistent base plus perturbed copies.

A clean base is laid out in groups of ``class_size`` rows that share their
determinant values (a zip code for ``order``, a paper for ``dblp``), so it
satisfies every template FD.  Each dirty tuple copies a clean row and
changes one dependent attribute, either to a close value (numeric +-1, or a
one-character edit) or to a value taken from another row.  Conflict counts
are tracked exactly while tuples are appended, which is how ``delta_cap``
is enforced.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Sequence

from .oracle import RangeQuery
from .relation import FunctionalDependency, Instance, parse_fd_set, read_csv

TEMPLATES = ("order", "dblp")

ORDER_ATTRS = ("id", "name", "AC", "PR", "PN", "STR", "CTY", "CT", "ST", "zip")
DBLP_ATTRS = ("title", "authors", "year", "publication", "pages", "ee", "url")

QUERY_ATTRIBUTE = {"order": "PR", "dblp": "year"}
NUMERIC = {"order": frozenset({"id", "PR"}), "dblp": frozenset({"year"})}

_WORDS = ("amber", "birch", "cedar", "delta", "ember", "fjord", "grove", "heron", "iris", "juniper",
          "kestrel", "linden", "maple", "nectar", "onyx", "pine", "quartz", "raven", "sage", "tundra")
_PRODUCTS = ("Keyboard", "Mouse", "Monitor", "Laptop", "Cable", "Headset", "Webcam", "Dock",
             "Charger", "Speaker", "Tablet", "Router")
_STATES = ("IL", "IN", "WI", "MI", "OH", "IA", "MN", "MO")
_VENUES = ("VLDB", "SIGMOD", "ICDE", "PODS", "ICDT", "EDBT", "CIKM", "KDD", "TODS", "TKDE")
_SURNAMES = ("Ito", "Okafor", "Silva", "Novak", "Larsen", "Haddad", "Moreau", "Kowalski", "Reyes",
             "Tanaka", "Bauer", "Costa")


class GeneratorError(ValueError):
    """Invalid generator settings, including an unsatisfiable delta_cap."""


@dataclass(frozen=True)
class GeneratorSpec:
    template: str = "order"
    n: int = 1000
    rho: float = 0.05
    delta_cap: int | None = None
    seed: int = 0
    class_size: int = 10

    def __post_init__(self):
        if self.template not in TEMPLATES:
            raise GeneratorError(f"unknown template {self.template!r}; expected one of {TEMPLATES}")
        if self.n < 1:
            raise GeneratorError("n must be positive")
        if not 0 <= self.rho <= 0.5:
            raise GeneratorError("rho must lie in [0, 0.5]")
        if self.class_size < 1:
            raise GeneratorError("class_size must be positive")
        if self.delta_cap is not None and self.delta_cap < 1:
            raise GeneratorError("delta_cap must be positive")

    @property
    def dirty_count(self) -> int:
        return math.ceil(Fraction(repr(float(self.rho))) * self.n)


@dataclass(frozen=True)
class GeneratedData:
    instance: Instance
    fds: tuple[FunctionalDependency, ...]
    dirty: tuple[int, ...]
    delta_max: int


def _fd_text(name: str) -> str:
    return resources.files("fdrepair").joinpath("data", f"{name}.fd").read_text(encoding="utf-8")


def template_fds(template: str) -> list[FunctionalDependency]:
    if template not in TEMPLATES:
        raise GeneratorError(f"unknown template {template!r}")
    return parse_fd_set(_fd_text(template))


def order_example() -> tuple[Instance, list[FunctionalDependency]]:
    """The six-tuple order table whose zip class splits into cities {2,2,1,1}."""
    with resources.files("fdrepair").joinpath("data", "order_example.csv").open(encoding="utf-8") as fh:
        instance = read_csv(fh, name="order")
    return instance, parse_fd_set(_fd_text("order"), instance.schema)


def _order_rows(n: int, class_size: int, rng: random.Random) -> list[list[str]]:
    rows = []
    for i in range(n):
        k = i // class_size
        rows.append([
            str(i + 1),
            f"{rng.choice(_PRODUCTS)} {rng.choice(_WORDS)}",
            str(200 + k % 800),
            str(rng.randint(1, 1000)),
            str(1_000_000 + i),
            f"{rng.choice(_WORDS).title()} St {k}-{rng.randrange(3)}",
            "US",
            f"{_WORDS[k % len(_WORDS)].title()}ville",
            _STATES[k % len(_STATES)],
            str(10_000 + k),
        ])
    return rows


def _dblp_rows(n: int, class_size: int, rng: random.Random) -> list[list[str]]:
    rows = []
    paper = None
    for i in range(n):
        p = i // class_size
        if i % class_size == 0:
            venue = rng.choice(_VENUES)
            start = 1 + rng.randrange(400)
            paper = [
                f"On {rng.choice(_WORDS)} {rng.choice(_WORDS)} queries {p}",
                f"{rng.choice(_SURNAMES)} and {rng.choice(_SURNAMES)}",
                str(rng.randint(1970, 2020)),
                venue,
                f"{start}-{start + rng.randint(5, 20)} #{p}",
                f"https://doi.org/10.{1000 + p % 9000}/{p}",
                f"db/conf/{venue.lower()}/{p}.html",
            ]
        rows.append(list(paper))
    return rows


def _close_value(value: str, numeric: bool, rng: random.Random) -> str:
    if numeric:
        v = int(float(value))
        return str(v + 1 if v <= 1 or rng.random() < 0.5 else v - 1)
    if not value:
        return "x"
    last = value[-1]
    repl = rng.choice([c for c in "abcdefghijklmnopqrstuvwxyz" if c != last])
    return value[:-1] + repl


class _ConflictTracker:
    """Per-FD class membership plus exact per-tuple conflict counts."""

    def __init__(self, fds: Sequence[FunctionalDependency], positions: dict[str, int]):
        self.keys = [([positions[a] for a in fd.determinant], [positions[a] for a in fd.dependent])
                     for fd in fds if not fd.trivial]
        self.classes: list[dict[tuple, dict[tuple, list[int]]]] = [{} for _ in self.keys]
        self.delta: list[int] = []

    def neighbours(self, row: Sequence[str]) -> set[int]:
        out: set[int] = set()
        for (xp, yp), classes in zip(self.keys, self.classes):
            group = classes.get(tuple(row[p] for p in xp))
            if not group:
                continue
            mine = tuple(row[p] for p in yp)
            for y, members in group.items():
                if y != mine:
                    out.update(members)
        return out

    def add(self, row: Sequence[str], nbrs: set[int] | None = None) -> int:
        t = len(self.delta)
        if nbrs is None:
            nbrs = self.neighbours(row)
        for u in nbrs:
            self.delta[u] += 1
        self.delta.append(len(nbrs))
        for (xp, yp), classes in zip(self.keys, self.classes):
            group = classes.setdefault(tuple(row[p] for p in xp), {})
            group.setdefault(tuple(row[p] for p in yp), []).append(t)
        return t


def generate_data(spec: GeneratorSpec, max_attempts: int = 200) -> GeneratedData:
    rng = random.Random(spec.seed)
    attrs = ORDER_ATTRS if spec.template == "order" else DBLP_ATTRS
    build = _order_rows if spec.template == "order" else _dblp_rows
    numeric = NUMERIC[spec.template]
    fds = template_fds(spec.template)
    positions = {a: i for i, a in enumerate(attrs)}
    rows = build(spec.n, spec.class_size, rng)

    tracker = _ConflictTracker(fds, positions)
    for row in rows:
        tracker.add(row)
    if any(tracker.delta):
        raise AssertionError("clean base is inconsistent")

    targets = [(fd, a) for fd in fds if not fd.trivial for a in sorted(set(fd.dependent) - set(fd.determinant))]
    cap = spec.delta_cap
    dirty = []
    for _ in range(spec.dirty_count):
        for _attempt in range(max_attempts):
            src = rows[rng.randrange(spec.n)]
            fd, attr = rng.choice(targets)
            p = positions[attr]
            if rng.random() < 0.5:
                value = _close_value(src[p], attr in numeric, rng)
            else:
                value = rows[rng.randrange(spec.n)][p]
            if value == src[p]:
                continue
            row = list(src)
            row[p] = value
            nbrs = tracker.neighbours(row)
            if not nbrs:
                continue
            if cap is not None and (len(nbrs) > cap or any(tracker.delta[u] >= cap for u in nbrs)):
                continue
            rows.append(row)
            dirty.append(tracker.add(row, nbrs))
            break
        else:
            raise GeneratorError(
                f"could not place dirty tuple {len(dirty) + 1} of {spec.dirty_count} "
                f"within delta_cap={cap}; lower rho or class_size, or raise the cap")
    instance = Instance.from_rows(attrs, rows, name=spec.template, numeric=numeric)
    return GeneratedData(instance, tuple(fds), tuple(dirty), max(tracker.delta, default=0))


def generate(spec: GeneratorSpec) -> Instance:
    return generate_data(spec).instance


def gen_query_workload(instance: Instance, attribute: str, count: int = 300,
                       selectivity: tuple[float, float] = (0.1, 1.0), seed: int = 0) -> list[RangeQuery]:
    """Random ranges covering roughly a ``selectivity`` fraction of the tuples.

    A drawn selectivity whose tuple count rounds to zero yields a range that
    lies above every value, so its result is empty.
    """
    lo_s, hi_s = selectivity
    if not 0 <= lo_s <= hi_s <= 1:
        raise ValueError("selectivity range must satisfy 0 <= low <= high <= 1")
    rng = random.Random(seed)
    key = instance.sort_key(attribute)
    pos = instance.schema.position(attribute)
    raw = sorted((row[pos] for row in instance.rows), key=key)
    n = len(raw)
    out = []
    for _ in range(count):
        k = round(rng.uniform(lo_s, hi_s) * n)
        if k == 0:
            if attribute in instance.numeric:
                top = str(math.floor(key(raw[-1])) + 1) if raw else "0"
            else:
                top = (raw[-1] if raw else "") + "~"
            out.append(RangeQuery(attribute, top, top))
            continue
        start = rng.randrange(n - k + 1)
        out.append(RangeQuery(attribute, raw[start], raw[start + k - 1]))
    return out
