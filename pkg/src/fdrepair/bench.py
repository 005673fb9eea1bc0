"""Benchmarks on generated data: repair distances against ``2*rho*n`` and
estimator accuracy and call counts against ``2*rho + eps``.

Configs come from a line-oriented ``key=value`` file.  Blocks are separated
by blank lines; a comma-separated value expands into one config per item,
and multiple lists form a grid.
"""
from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

from .conflicts import assign_ranking, detect_conflicts
from .estimator import (ClassProbe, LazyRanking, fast_inc_deg, fast_inc_deg_otf, greedy_repair_scan,
                        ranked_by)
from .exact import BudgetExceeded, optimal_s_repair
from .generator import QUERY_ATTRIBUTE, GeneratorSpec, gen_query_workload, generate_data
from .oracle import build_counter_index, build_dense_index
from .repair import baseline_lp_osr, qt_lp_osr, te_lp_osr


class BenchFailure(AssertionError):
    """A bound check failed; the message names the config and seed."""


@dataclass(frozen=True)
class BenchConfig:
    template: str = "order"
    n: int = 1000
    rho: float = 0.05
    eps: float = 0.1
    seed: int = 0
    delta_cap: int | None = None
    class_size: int = 10
    queries: int = 300
    selectivity: tuple[float, float] = (0.1, 1.0)
    exact_limit: int = 14

    def generator_spec(self) -> GeneratorSpec:
        return GeneratorSpec(self.template, self.n, self.rho, self.delta_cap, self.seed, self.class_size)

    @property
    def ub1(self) -> Fraction:
        return 2 * Fraction(repr(float(self.rho))) * self.n

    @property
    def ub2(self) -> Fraction:
        return 2 * Fraction(repr(float(self.rho))) + Fraction(repr(float(self.eps)))

    def label(self) -> str:
        return (f"template={self.template} n={self.n} rho={self.rho} eps={self.eps} "
                f"seed={self.seed} delta_cap={self.delta_cap}")


def _parse_value(key: str, raw: str):
    kinds = {f.name: f.type for f in fields(BenchConfig)}
    if key not in kinds:
        raise ValueError(f"unknown config key {key!r}")
    raw = raw.strip()
    if key == "template":
        return raw
    if key == "delta_cap":
        return None if raw.lower() in ("", "none") else int(raw)
    if key == "selectivity":
        lo, _, hi = raw.partition(":")
        return (float(lo), float(hi or lo))
    if key in ("rho", "eps"):
        return float(raw)
    return int(raw)


def parse_config(source: TextIO | str) -> list[BenchConfig]:
    text = source if isinstance(source, str) else source.read()
    blocks: list[list[tuple[str, str, int]]] = [[]]
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            if blocks[-1]:
                blocks.append([])
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected key=value")
        blocks[-1].append((key.strip(), value, lineno))
    configs = []
    for block in blocks:
        if not block:
            continue
        keys, choices = [], []
        for key, value, lineno in block:
            try:
                options = [_parse_value(key, v) for v in value.split(",")]
            except ValueError as exc:
                raise ValueError(f"config line {lineno}: {exc}") from None
            keys.append(key)
            choices.append(options)
        for combo in itertools.product(*choices):
            configs.append(BenchConfig(**dict(zip(keys, combo))))
    return configs


REPAIR_COLUMNS = ("template", "n", "rho", "sigma", "seed", "delta_cap", "tuples", "conflicts", "delta_max",
                  "algorithm", "distance", "guarantee", "lp_objective", "opt", "ub1", "within_ub1",
                  "within_ratio", "time_s")


def _repair_rows(cfg: BenchConfig, timing: bool = False) -> list[dict]:
    data = generate_data(cfg.generator_spec())
    inst, fds = data.instance, list(data.fds)
    m = len(detect_conflicts(inst, fds))
    opt = None
    if len(inst) <= cfg.exact_limit:
        try:
            opt = optimal_s_repair(inst, fds).optimal_distance
        except BudgetExceeded:
            opt = None
    rows = []
    for name, algo in (("baseline", baseline_lp_osr), ("te", te_lp_osr), ("qt", qt_lp_osr)):
        start = time.perf_counter()
        res = algo(inst, fds)
        elapsed = time.perf_counter() - start
        within_ub1 = res.distance <= cfg.ub1
        within_ratio = "" if opt is None else res.distance <= res.guarantee * opt
        if not within_ub1:
            raise BenchFailure(f"{name} distance {res.distance} exceeds UB1={cfg.ub1} ({cfg.label()})")
        rows.append({
            "template": cfg.template, "n": cfg.n, "rho": cfg.rho, "sigma": len(fds), "seed": cfg.seed,
            "delta_cap": "" if cfg.delta_cap is None else cfg.delta_cap, "tuples": len(inst),
            "conflicts": m, "delta_max": data.delta_max, "algorithm": name, "distance": res.distance,
            "guarantee": str(res.guarantee), "lp_objective": str(res.lp_objective),
            "opt": "" if opt is None else opt, "ub1": str(cfg.ub1), "within_ub1": within_ub1,
            "within_ratio": within_ratio, "time_s": f"{elapsed:.6f}" if timing else "",
        })
    return rows


ESTIMATOR_COLUMNS = ("template", "n", "rho", "eps", "seed", "delta_cap", "tuples", "conflicts", "delta_max",
                     "variant", "queries", "empty_queries", "avg_estimate", "max_estimate", "ub2",
                     "all_within_ub2", "in_band_fraction", "avg_in_result_calls", "avg_eliminate_calls",
                     "avg_memo_hits", "avg_probe_work", "avg_query_time")

VARIANTS = (("prebuilt", "dense"), ("prebuilt", "tree"), ("otf", "dense"), ("otf", "tree"))


def query_seed(seed: int, query: int) -> int:
    return seed * 1_000_003 + query


def _estimator_rows(cfg: BenchConfig, timing: bool = False) -> list[dict]:
    data = generate_data(cfg.generator_spec())
    inst, fds = data.instance, list(data.fds)
    conflicts = detect_conflicts(inst, fds)
    attr = QUERY_ATTRIBUTE[cfg.template]
    indexes = {"dense": build_dense_index(inst, attr), "tree": build_counter_index(inst, attr)}
    workload = gen_query_workload(inst, attr, cfg.queries, cfg.selectivity, cfg.seed)
    prebuilt = assign_ranking(conflicts, cfg.seed, n=len(inst))
    lazy = LazyRanking(cfg.seed)
    probe = ClassProbe(inst, fds)
    truth_index = {"prebuilt": prebuilt, "otf": ranked_by(lazy, conflicts, len(inst))}
    ub2 = cfg.ub2
    eps = Fraction(repr(float(cfg.eps)))
    rows = []
    for ranking, oracle_kind in VARIANTS:
        ests, in_band, empty = [], 0, 0
        in_result = elim = memo = work = 0
        elapsed = 0.0
        for qi, query in enumerate(workload):
            qseed = query_seed(cfg.seed, qi)
            oracle = indexes[oracle_kind].open(query, seed=qseed)
            start = time.perf_counter()
            if ranking == "prebuilt":
                rep = fast_inc_deg(prebuilt, oracle, cfg.eps, qseed, query_id=qi)
            else:
                rep = fast_inc_deg_otf(probe, oracle, cfg.eps, qseed, ranking=lazy, query_id=qi)
            elapsed += time.perf_counter() - start
            truth = greedy_repair_scan(truth_index[ranking], oracle)
            if rep.empty:
                empty += 1
                in_band += 1
            else:
                ds = truth.degree
                if ds <= Fraction(rep.estimate) <= ds + eps:
                    in_band += 1
            ests.append(rep.estimate)
            in_result += rep.in_result_calls
            elim += rep.eliminate_calls
            memo += rep.memo_hits
            work += rep.probe_work
        q = max(len(workload), 1)
        within = all(Fraction(e) <= ub2 for e in ests)
        rows.append({
            "template": cfg.template, "n": cfg.n, "rho": cfg.rho, "eps": cfg.eps, "seed": cfg.seed,
            "delta_cap": "" if cfg.delta_cap is None else cfg.delta_cap, "tuples": len(inst),
            "conflicts": len(conflicts), "delta_max": data.delta_max,
            "variant": f"{ranking}-{oracle_kind}", "queries": len(workload), "empty_queries": empty,
            "avg_estimate": f"{sum(ests) / q:.6f}", "max_estimate": f"{max(ests, default=0.0):.6f}",
            "ub2": str(ub2), "all_within_ub2": within, "in_band_fraction": f"{in_band / q:.4f}",
            "avg_in_result_calls": f"{in_result / q:.3f}", "avg_eliminate_calls": f"{elim / q:.3f}",
            "avg_memo_hits": f"{memo / q:.3f}", "avg_probe_work": f"{work / q:.3f}",
            "avg_query_time": f"{elapsed / q:.6f}" if timing else "",
        })
    return rows


def _run(worker, configs: Sequence[BenchConfig], workers: int, timing: bool) -> list[dict]:
    if workers <= 1 or len(configs) <= 1:
        return [row for cfg in configs for row in worker(cfg, timing)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(worker, configs, itertools.repeat(timing)))
    return [row for part in parts for row in part]


def run_repair_bench(configs: Sequence[BenchConfig], workers: int = 1, timing: bool = False) -> list[dict]:
    """Baseline, TE and QT distances per config; raises ``BenchFailure`` above UB1."""
    return _run(_repair_rows, configs, workers, timing)


def run_estimator_bench(configs: Sequence[BenchConfig], workers: int = 1, timing: bool = False) -> list[dict]:
    """All four estimator variants per config, aggregated over the query workload."""
    return _run(_estimator_rows, configs, workers, timing)


def write_rows(rows: Iterable[dict], columns: Sequence[str], sink: TextIO) -> None:
    writer = csv.DictWriter(sink, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def with_overrides(configs: Sequence[BenchConfig], **overrides) -> list[BenchConfig]:
    return [replace(c, **{k: v for k, v in overrides.items() if v is not None}) for c in configs]
