"""Command-line front end.

Exit codes: 0 success, 2 invalid input or arguments, 3 file I/O failure.
Randomised commands print the seed they used, so any run can be replayed.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import secrets
import sys
from typing import Sequence

from .bench import (ESTIMATOR_COLUMNS, REPAIR_COLUMNS, BenchFailure, parse_config, run_estimator_bench,
                    run_repair_bench, with_overrides, write_rows)
from .conflicts import assign_ranking, delta_stats, detect_conflicts, dump_conflicts
from .estimator import ClassProbe, fast_inc_deg, fast_inc_deg_otf, write_reports
from .exact import BudgetExceeded, optimal_s_repair
from .generator import QUERY_ATTRIBUTE, GeneratorError, GeneratorSpec, gen_query_workload, generate
from .oracle import RangeQuery, build_counter_index, build_dense_index, read_workload, write_workload
from .relation import DataError, FDError, parse_fd_set, read_csv, write_csv
from .repair import PartitionError, baseline_lp_osr, qt_lp_osr, te_lp_osr

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _load(args) -> tuple:
    instance = read_csv(args.dataset)
    with open(args.fds, encoding="utf-8") as fh:
        fds = parse_fd_set(fh.read(), instance.schema)
    return instance, fds


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
    print(f"seed={args.seed}", file=sys.stderr)
    return args.seed


@contextlib.contextmanager
def _sink(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _summary_stream(args):
    # Keep stdout clean when it carries the CSV payload.
    return sys.stderr if args.out in (None, "-") else sys.stdout


def cmd_detect(args) -> int:
    instance, fds = _load(args)
    found = detect_conflicts(instance, fds, naive=args.naive)
    if args.ranking == "lex":
        index = assign_ranking(found, n=len(instance), lexicographic=True)
    else:
        index = assign_ranking(found, _seed(args), n=len(instance))
    with _sink(args.out) as out:
        dump_conflicts(index, out)
    dmax, _ = delta_stats(index)
    print(f"n={len(instance)},m={index.m},delta_max={dmax}", file=_summary_stream(args))
    return EXIT_OK


def _write_repair(result, out) -> None:
    out.write(f"#algorithm={result.algorithm},distance={result.distance},"
              f"guarantee={result.guarantee},lp_objective={result.lp_objective}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["deleted_id"])
    writer.writerows([t] for t in sorted(result.deleted))


def cmd_repair(args) -> int:
    instance, fds = _load(args)
    stream = _summary_stream(args)
    if args.algo == "exact":
        res = optimal_s_repair(instance, fds, budget=args.budget)
        with _sink(args.out) as out:
            out.write(f"#algorithm=exact,distance={res.optimal_distance},nodes={res.node_count}\n")
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["deleted_id"])
            writer.writerows([t] for t in sorted(set(instance.ids) - res.optimal_repair))
        print(f"algorithm=exact,distance={res.optimal_distance}", file=stream)
        return EXIT_OK
    algo = {"bl": baseline_lp_osr, "te": te_lp_osr, "qt": qt_lp_osr}[args.algo]
    result = algo(instance, fds)
    with _sink(args.out) as out:
        _write_repair(result, out)
    print(f"algorithm={result.algorithm},distance={result.distance},guarantee={result.guarantee},"
          f"lp_objective={result.lp_objective}", file=stream)
    if args.algo == "qt":
        d = result.details
        k = "none" if d["chosen_k"] is None else d["chosen_k"]
        print(f"k={k},eta_k={d['chosen_eta']},predicted_ratio={d['predicted_ratio']}", file=stream)
    return EXIT_OK


def cmd_exact(args) -> int:
    instance, fds = _load(args)
    res = optimal_s_repair(instance, fds, budget=args.budget)
    n = len(instance)
    degree = "" if n == 0 else f"{res.optimal_distance}/{n}"
    with _sink(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["n", "optimal_distance", "inc_deg", "nodes"])
        writer.writerow([n, res.optimal_distance, degree, res.node_count])
    return EXIT_OK


def cmd_estimate(args) -> int:
    instance, fds = _load(args)
    if not 0 < args.eps <= 1:
        raise ValueError(f"--eps must satisfy 0 < eps <= 1, got {args.eps}")
    if args.workload:
        with open(args.workload, newline="", encoding="utf-8") as fh:
            queries = read_workload(fh)
    else:
        if args.attr is None or args.low is None or args.high is None:
            raise ValueError("--attr, --low and --high are required without --workload")
        queries = [RangeQuery(args.attr, args.low, args.high)]
    seed = _seed(args)
    builders = {"dense": build_dense_index, "tree": build_counter_index}
    indexes = {}
    conflicts = detect_conflicts(instance, fds)
    prebuilt = None
    probe = None
    reports = []
    for qi, query in enumerate(queries):
        if query.attribute not in indexes:
            indexes[query.attribute] = builders[args.oracle](instance, query.attribute)
        qseed = seed + qi
        oracle = indexes[query.attribute].open(query, seed=qseed)
        if args.ranking == "otf":
            probe = probe or ClassProbe(instance, fds)
            reports.append(fast_inc_deg_otf(probe, oracle, args.eps, qseed, ranking=seed, query_id=qi))
        else:
            if prebuilt is None:
                prebuilt = assign_ranking(conflicts, seed, n=len(instance), lexicographic=args.ranking == "lex")
            reports.append(fast_inc_deg(prebuilt, oracle, args.eps, qseed, query_id=qi))
    with _sink(args.out) as out:
        write_reports(reports, out)
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = _seed(args)
    spec = GeneratorSpec(args.template, args.n, args.rho, args.delta_cap, seed, args.class_size)
    instance = generate(spec)
    with _sink(args.out) as out:
        write_csv(instance, out)
    if args.workload_out:
        attr = args.attr or QUERY_ATTRIBUTE[args.template]
        queries = gen_query_workload(instance, attr, args.queries, (args.sel_low, args.sel_high), seed)
        with open(args.workload_out, "w", newline="", encoding="utf-8") as fh:
            write_workload(queries, fh)
    return EXIT_OK


def cmd_bench(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        configs = parse_config(fh)
    configs = with_overrides(configs, seed=args.seed)
    if args.kind == "repair":
        rows, columns = run_repair_bench(configs, args.workers, args.timing), REPAIR_COLUMNS
    else:
        rows, columns = run_estimator_bench(configs, args.workers, args.timing), ESTIMATOR_COLUMNS
    with _sink(args.out) as out:
        write_rows(rows, columns, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fdrepair", description="FD conflict detection, subset repair and "
                                             "inconsistency-degree estimation")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def data_args(sp):
        sp.add_argument("dataset", help="CSV dataset (optional '#numeric:' first line)")
        sp.add_argument("fds", help="FD file, one 'X1,X2 -> Y1,Y2' per line")
        sp.add_argument("--out", help="output path (default: standard output)")

    sp = sub.add_parser("detect", help="list all conflicts with their ranks")
    data_args(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--ranking", choices=("random", "lex"), default="random")
    sp.add_argument("--naive", action="store_true", help="use the quadratic reference scan")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("repair", help="compute a subset repair")
    data_args(sp)
    sp.add_argument("--algo", choices=("bl", "te", "qt", "exact"), default="bl")
    sp.add_argument("--budget", type=int, default=1_000_000, help="node budget for --algo exact")
    sp.set_defaults(func=cmd_repair)

    sp = sub.add_parser("exact", help="optimal repair distance and inconsistency degree")
    data_args(sp)
    sp.add_argument("--budget", type=int, default=1_000_000)
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("estimate", help="estimate the inconsistency degree of range-query results")
    data_args(sp)
    sp.add_argument("--attr")
    sp.add_argument("--low")
    sp.add_argument("--high")
    sp.add_argument("--workload", help="CSV of attribute,low,high queries")
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--oracle", choices=("dense", "tree"), default="dense")
    sp.add_argument("--ranking", choices=("pre", "otf", "lex"), default="pre")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("gen", help="generate a dirty synthetic dataset")
    sp.add_argument("--template", choices=("order", "dblp"), default="order")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--rho", type=float, default=0.05)
    sp.add_argument("--delta-cap", type=int)
    sp.add_argument("--class-size", type=int, default=10)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--workload-out", help="also write a query workload here")
    sp.add_argument("--attr", help="query attribute (default: the template's)")
    sp.add_argument("--queries", type=int, default=300)
    sp.add_argument("--sel-low", type=float, default=0.1)
    sp.add_argument("--sel-high", type=float, default=1.0)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="run a benchmark config file")
    sp.add_argument("kind", choices=("repair", "estimator"))
    sp.add_argument("--config", required=True)
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int, help="override every config's seed")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--timing", action="store_true", help="record wall-clock columns")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"fdrepair: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FDError, DataError, GeneratorError, PartitionError, BudgetExceeded, BenchFailure, ValueError) as exc:
        print(f"fdrepair: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
