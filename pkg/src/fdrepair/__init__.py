"""Functional-dependency repair and inconsistency-degree estimation."""
from .conflicts import (Conflict, ConflictIndex, assign_ranking, build_index, delta_stats, detect_conflicts,
                        detect_conflicts_naive)
from .estimator import (ClassProbe, EstimateReport, GreedyScanResult, LazyRanking, LocalEliminator,
                        fast_inc_deg, fast_inc_deg_otf, greedy_repair_scan)
from .exact import ExactResult, exact_inc_deg, optimal_s_repair
from .generator import GeneratorSpec, gen_query_workload, generate, order_example
from .oracle import RangeQuery, SubsetOracle, build_counter_index, build_dense_index, open_oracle
from .relation import (ClassPartition, FunctionalDependency, Instance, Schema, dist_sub, inc_deg,
                       is_consistent, parse_fd_set, partition, read_csv)
from .repair import (ConsistentPartition, QuasiTuranProfile, RepairResult, baseline_lp_osr,
                     consistent_partition, find_disjoint_triads, qt_lp_osr, quasi_turan_profile, te_lp_osr)
from .vclp import HalfIntegralSolution, solve_vc_lp

__version__ = "0.1.0"
