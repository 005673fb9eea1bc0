"""Covering LPs ``min sum(x)`` s.t. ``sum(x[S_r]) >= b_r``, ``0 <= x (<= 1)``.

Small problems go through an exact rational simplex on the dual packing LP
``max b.y`` s.t. ``A^T y <= 1``, ``y >= 0``.  The slack basis is feasible
from the start, so no phase one is needed, and the primal vertex is read off
the reduced costs of the slack columns.  Bland's rule prevents cycling.

Anything larger goes to HiGHS first.  Its vertex is
snapped to small-denominator rationals and accepted as exact only if
feasibility and a matching dual certificate check out in rational arithmetic;
otherwise the exact simplex runs after all.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

EXACT_CELL_LIMIT = 2_000


@dataclass(frozen=True)
class CoveringRow:
    members: tuple[int, ...]
    rhs: Fraction


@dataclass
class LPSolution:
    x: list[Fraction]
    objective: Fraction
    exact: bool
    pivots: int = 0


def feasible(x: Sequence[Fraction], rows: Sequence[CoveringRow]) -> bool:
    return all(v >= 0 for v in x) and all(sum(x[i] for i in r.members) >= r.rhs for r in rows)


def rational_simplex(n: int, rows: Sequence[CoveringRow], upper: bool = False) -> LPSolution:
    """Exact simplex; ``upper=True`` adds ``x <= 1`` (a dual column ``-z_i`` per variable)."""
    n_rows = len(rows)
    if n_rows == 0:
        return LPSolution([Fraction(0)] * n, Fraction(0), True)
    n_up = n if upper else 0
    slack0 = n_rows + n_up
    width = slack0 + n + 1
    zero = Fraction(0)
    # Tableau row i is the dual constraint for primal variable i.
    tab = [[zero] * width for _ in range(n)]
    for r, row in enumerate(rows):
        for i in row.members:
            tab[i][r] += 1
    for i in range(n):
        if upper:
            tab[i][n_rows + i] = Fraction(-1)
        tab[i][slack0 + i] = Fraction(1)
        tab[i][-1] = Fraction(1)
    obj = [-row.rhs for row in rows] + [Fraction(1)] * n_up + [zero] * (n + 1)
    basis = [slack0 + i for i in range(n)]
    pivots = 0
    while True:
        enter = next((j for j in range(width - 1) if obj[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(n):
            coef = tab[i][enter]
            if coef > 0:
                ratio = tab[i][-1] / coef
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            raise ArithmeticError("dual LP unbounded; the covering LP is infeasible")
        prow = tab[leave]
        pv = prow[enter]
        if pv != 1:
            prow = [v / pv for v in prow]
            tab[leave] = prow
        nz = [j for j, v in enumerate(prow) if v]
        for i in range(n):
            if i == leave:
                continue
            f = tab[i][enter]
            if f:
                row = tab[i]
                for j in nz:
                    row[j] -= f * prow[j]
        f = obj[enter]
        for j in nz:
            obj[j] -= f * prow[j]
        basis[leave] = enter
        pivots += 1
    x = [obj[slack0 + i] for i in range(n)]
    return LPSolution(x, obj[-1], True, pivots)


def _highs(n: int, rows: Sequence[CoveringRow], upper: bool = False) -> LPSolution:
    from scipy.optimize import linprog
    from scipy.sparse import csr_matrix

    data, ri, ci = [], [], []
    for r, row in enumerate(rows):
        for i in row.members:
            data.append(-1.0)
            ri.append(r)
            ci.append(i)
    a_ub = csr_matrix((data, (ri, ci)), shape=(len(rows), n))
    b_ub = -np.array([float(r.rhs) for r in rows])
    res = linprog(np.ones(n), A_ub=a_ub, b_ub=b_ub, bounds=(0, 1 if upper else None), method="highs-ds")
    if res.status != 0:
        raise ArithmeticError(f"HiGHS failed: {res.message}")
    x = [Fraction(v).limit_denominator(64) for v in res.x]
    y = [Fraction(-v).limit_denominator(64) for v in res.ineqlin.marginals]
    z = [Fraction(-v).limit_denominator(64) for v in res.upper.marginals] if upper else [Fraction(0)] * n
    objective = sum(x, Fraction(0))
    dual_ok = all(v >= 0 for v in y) and all(v >= 0 for v in z)
    if dual_ok:
        load = [-v for v in z]
        for r, row in enumerate(rows):
            if y[r]:
                for i in row.members:
                    load[i] += y[r]
        dual_value = sum(r.rhs * v for r, v in zip(rows, y)) - sum(z)
        dual_ok = all(v <= 1 for v in load) and dual_value == objective
    exact = dual_ok and feasible(x, rows) and (not upper or all(v <= 1 for v in x))
    return LPSolution(x, objective, exact)


def solve_covering_lp(n: int, rows: Sequence[CoveringRow], upper: bool = False,
                      cell_limit: int = EXACT_CELL_LIMIT) -> LPSolution:
    if n * (len(rows) + 2 * n + 1) <= cell_limit:
        return rational_simplex(n, rows, upper)
    sol = _highs(n, rows, upper)
    if sol.exact:
        return sol
    # Snapping failed the certificate; pay for the exact pivot instead.
    log.info("HiGHS vertex not certified (n=%d, rows=%d); re-solving exactly", n, len(rows))
    return rational_simplex(n, rows, upper)
