"""Exhaustive LP oracle for desk-scale instances.

Enumerates every basic solution of the standard-form polytope and keeps the
feasible ones, so the reported optimum is exact up to linear-algebra
roundoff.  The construction of the standard form here is deliberately
independent from the simplex engine's: the two paths share nothing but the
``LpProblem`` container, which is what makes cross-checking them meaningful.

Only bounded feasible regions are supported (every vertex is then a basic
feasible solution and the minimum is attained at one of them).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np

from .problem import LpProblem, LpStatus, TooLarge

MAX_ORACLE_COLUMNS = 12


@dataclass
class OracleResult:
    status: LpStatus
    objective: float | None
    primal: dict[str, float]


def _standard_form(problem: LpProblem):
    """Rewrite as min c'x + c0, A x = b, x >= 0.

    Shifts finite lower bounds, mirrors upper-bounded-only variables, splits
    free variables, and turns finite upper bounds into explicit rows.  Returns
    (A, b, c, c0, recover) where recover maps a standard-form point back to
    user variable values.
    """
    cols = []          # per column: (user index, offset multiplier) pairs
    col_cost = []
    shifts = np.zeros(len(problem.variables))   # constant added per user var
    c0 = 0.0
    ub_rows = []       # (column index, bound) for finite spans

    for ui, v in enumerate(problem.variables):
        if v.lower == -math.inf and v.upper == math.inf:
            cols.append((ui, +1.0)); col_cost.append(v.cost)
            cols.append((ui, -1.0)); col_cost.append(-v.cost)
        elif v.lower > -math.inf:
            cols.append((ui, +1.0)); col_cost.append(v.cost)
            shifts[ui] = v.lower
            c0 += v.cost * v.lower
            if v.upper < math.inf:
                ub_rows.append((len(cols) - 1, v.upper - v.lower))
        else:  # upper bound only: substitute x = u - x'
            cols.append((ui, -1.0)); col_cost.append(-v.cost)
            shifts[ui] = v.upper
            c0 += v.cost * v.upper

    n_struct = len(cols)
    m = len(problem.constraints) + len(ub_rows)
    slack_count = sum(1 for con in problem.constraints if con.sense != "==")
    n = n_struct + slack_count + len(ub_rows)
    A = np.zeros((m, n))
    b = np.zeros(m)
    c = np.zeros(n)
    c[:n_struct] = col_cost

    col_of_user: dict[int, list[int]] = {}
    for j, (ui, _) in enumerate(cols):
        col_of_user.setdefault(ui, []).append(j)

    slack_at = n_struct
    for ri, con in enumerate(problem.constraints):
        rhs = con.rhs
        for var, coef in con.coeffs.items():
            ui = problem.variable_index(var)
            rhs -= coef * shifts[ui]
            for j in col_of_user[ui]:
                A[ri, j] += coef * cols[j][1]
        b[ri] = rhs
        if con.sense == "<=":
            A[ri, slack_at] = 1.0
            slack_at += 1
        elif con.sense == ">=":
            A[ri, slack_at] = -1.0
            slack_at += 1
    for k, (j, span) in enumerate(ub_rows):
        ri = len(problem.constraints) + k
        A[ri, j] = 1.0
        A[ri, slack_at] = 1.0
        slack_at += 1
        b[ri] = span

    def recover(x_std: np.ndarray) -> dict[str, float]:
        values = shifts.copy()
        for j, (ui, sign) in enumerate(cols):
            values[ui] += sign * x_std[j]
        return {v.name: float(values[ui]) for ui, v in enumerate(problem.variables)}

    return A, b, c, c0, recover


def enumerate_vertices_oracle(problem: LpProblem,
                              feas_tol: float = 1e-9) -> OracleResult:
    """Minimum over all basic feasible solutions.

    Precondition: at most ``MAX_ORACLE_COLUMNS`` columns after slack
    augmentation (raises ``TooLarge`` otherwise) and a bounded feasible
    region.  Reports infeasibility when no basic solution is feasible.
    """
    A, b, c, c0, recover = _standard_form(problem)
    m, n = A.shape
    if n > MAX_ORACLE_COLUMNS:
        raise TooLarge(f"{n} standard-form columns exceeds {MAX_ORACLE_COLUMNS}")

    if m == 0:
        # No rows: with a bounded region every column must sit at zero.
        return OracleResult(LpStatus.OPTIMAL, c0, recover(np.zeros(n)))

    rank = int(np.linalg.matrix_rank(A)) if A.size else 0
    scale = 1.0 + float(np.abs(b).max(initial=0.0))

    if rank == 0:
        # All-zero rows: x = 0 is the only basic candidate.
        if np.abs(b).max(initial=0.0) > feas_tol * scale:
            return OracleResult(LpStatus.INFEASIBLE, None, {})
        return OracleResult(LpStatus.OPTIMAL, c0, recover(np.zeros(n)))

    bases = list(combinations(range(n), rank))
    best_obj = math.inf
    best_x = None
    for basis in bases:
        B = A[:, basis]
        # Least-squares solve tolerates rank-deficient subsets; the residual
        # test below rejects both singular bases and inconsistent systems.
        x_b, *_ = np.linalg.lstsq(B, b, rcond=None)
        if not np.all(np.isfinite(x_b)):
            continue
        if np.linalg.norm(B @ x_b - b, ord=np.inf) > feas_tol * scale:
            continue
        if x_b.min(initial=0.0) < -feas_tol * scale:
            continue
        x = np.zeros(n)
        x[list(basis)] = np.clip(x_b, 0.0, None)
        obj = float(c @ x) + c0
        if obj < best_obj - 1e-15:
            best_obj = obj
            best_x = x
    if best_x is None:
        return OracleResult(LpStatus.INFEASIBLE, None, {})
    return OracleResult(LpStatus.OPTIMAL, best_obj, recover(best_x))
