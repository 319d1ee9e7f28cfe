"""Two-phase revised primal simplex.

The problem is rewritten as ``min c'x, Ax = b, x >= 0``: finite lower bounds
are shifted out, variables with only an upper bound are mirrored, free
variables are split into positive and negative parts, finite bound spans
become explicit rows, and inequality rows gain slack or surplus columns.

Phase I minimizes the sum of artificial variables from an identity basis;
Phase II reuses the feasible basis with the true costs.  Pivoting follows
Bland's rule (smallest eligible index enters, smallest-index tie-break on
the leaving variable), which rules out cycling, so the iteration cap of
``50 * (rows + columns)`` can only trip on a solver defect.  The basis
inverse is updated in place and refactorized from scratch every
``REFACTOR_EVERY`` pivots to shed accumulated roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import (
    DUALITY_GAP_TOL,
    FEASIBILITY_TOL,
    REDUCED_COST_TOL,
    CycleLimitExceeded,
    LpProblem,
    LpSolution,
    LpStatus,
    SolverFailed,
    check_solution,
)

REFACTOR_EVERY = 50
PIVOT_TOL = 1e-10


@dataclass
class _StandardForm:
    A: np.ndarray
    b: np.ndarray            # nonnegative after row sign fixes
    c: np.ndarray
    c0: float
    row_sign: np.ndarray     # +1 / -1 applied to each row
    n_user_rows: int
    slack_col: np.ndarray    # per row: its slack column index, or -1
    cols: list               # structural column -> (user var index, sign)
    shifts: np.ndarray       # constant offset per user variable


def _standardize(problem: LpProblem) -> _StandardForm:
    cols: list[tuple[int, float]] = []
    col_cost: list[float] = []
    shifts = np.zeros(len(problem.variables))
    c0 = 0.0
    ub_rows: list[tuple[int, float]] = []

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
        else:
            cols.append((ui, -1.0)); col_cost.append(-v.cost)
            shifts[ui] = v.upper
            c0 += v.cost * v.upper

    n_struct = len(cols)
    n_user = len(problem.constraints)
    m = n_user + len(ub_rows)
    n_slack = sum(1 for con in problem.constraints if con.sense != "==") + len(ub_rows)
    n = n_struct + n_slack

    A = np.zeros((m, n))
    b = np.zeros(m)
    c = np.zeros(n)
    c[:n_struct] = col_cost
    slack_col = np.full(m, -1, dtype=int)

    col_of_user: dict[int, list[int]] = {}
    for j, (ui, _) in enumerate(cols):
        col_of_user.setdefault(ui, []).append(j)

    nxt = n_struct
    for ri, con in enumerate(problem.constraints):
        rhs = con.rhs
        for var, coef in con.coeffs.items():
            ui = problem.variable_index(var)
            rhs -= coef * shifts[ui]
            for j in col_of_user[ui]:
                A[ri, j] += coef * cols[j][1]
        b[ri] = rhs
        if con.sense != "==":
            A[ri, nxt] = 1.0 if con.sense == "<=" else -1.0
            slack_col[ri] = nxt
            nxt += 1
    for k, (j, span) in enumerate(ub_rows):
        ri = n_user + k
        A[ri, j] = 1.0
        A[ri, nxt] = 1.0
        slack_col[ri] = nxt
        nxt += 1
        b[ri] = span

    row_sign = np.ones(m)
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    row_sign[neg] = -1.0
    return _StandardForm(A, b, c, c0, row_sign, n_user, slack_col, cols, shifts)


class _Tableau:
    """Revised-simplex working state over the equality form."""

    def __init__(self, A: np.ndarray, b: np.ndarray):
        self.A = A
        self.b = b
        self.m, self.n = A.shape
        self.basis = np.zeros(self.m, dtype=int)
        self.binv = np.eye(self.m)
        self.xb = b.copy()
        self.pivots = 0
        self.refactorizations = 0

    def refactorize(self):
        B = self.A[:, self.basis]
        try:
            self.binv = np.linalg.solve(B, np.eye(self.m))
        except np.linalg.LinAlgError as exc:
            raise SolverFailed("singular basis during refactorization") from exc
        self.xb = self.binv @ self.b
        np.clip(self.xb, 0.0, None, out=self.xb)
        self.refactorizations += 1

    def pivot(self, row: int, col: int, direction: np.ndarray, step: float):
        self.xb -= step * direction
        self.xb[row] = step
        np.clip(self.xb, 0.0, None, out=self.xb)
        piv = direction[row]
        self.binv[row] /= piv
        others = np.arange(self.m) != row
        self.binv[others] -= np.outer(direction[others], self.binv[row])
        self.basis[row] = col
        self.pivots += 1
        if self.pivots % REFACTOR_EVERY == 0:
            self.refactorize()


def _run_phase(tab: _Tableau, c: np.ndarray, allowed: np.ndarray,
               pinned: np.ndarray, cap: int) -> tuple[str, int | None]:
    """Iterate until optimal or unbounded.  Returns (status, entering_col).

    ``pinned`` marks columns that must stay at zero (retired artificials);
    when one is basic, any pivot touching its row forces it out at step 0.
    """
    A, m = tab.A, tab.m
    while True:
        if tab.pivots >= cap:
            raise CycleLimitExceeded(
                f"simplex exceeded {cap} pivots; Bland's rule should prevent this")
        y = c[tab.basis] @ tab.binv
        rc = c - y @ A
        rc[tab.basis] = 0.0
        eligible = np.where(allowed & (rc < -REDUCED_COST_TOL))[0]
        if eligible.size == 0:
            return "optimal", None
        j = int(eligible[0])  # Bland: smallest index enters
        d = tab.binv @ A[:, j]

        basic_pinned = pinned[tab.basis]
        normal = d > PIVOT_TOL
        forced = basic_pinned & (np.abs(d) > PIVOT_TOL)
        candidates = np.where(normal | forced)[0]
        if candidates.size == 0:
            return "unbounded", j
        ratios = np.where(forced[candidates],
                          tab.xb[candidates] / np.abs(d[candidates]),
                          tab.xb[candidates] / d[candidates])
        best = ratios.min()
        ties = candidates[ratios <= best + 1e-12]
        row = int(ties[np.argmin(tab.basis[ties])])  # Bland tie-break
        tab.pivot(row, j, d, float(max(best, 0.0)))


def solve_simplex(problem: LpProblem) -> LpSolution:
    """Solve with the two-phase revised simplex described in the module docs."""
    std = _standardize(problem)
    A, b, c = std.A, std.b, std.c
    m, n = A.shape

    if n == 0:
        # Constraints over an empty variable set: feasibility is immediate.
        ok = np.all(np.abs(b) <= FEASIBILITY_TOL)
        if not ok:
            return LpSolution(LpStatus.INFEASIBLE, None, diagnostics={"phase": 1})
        return LpSolution(LpStatus.OPTIMAL, std.c0,
                          {v.name: float(std.shifts[i])
                           for i, v in enumerate(problem.variables)},
                          {con.name: 0.0 for con in problem.constraints})

    # Phase I: identity basis from usable slacks, artificials elsewhere.
    art_cols = []
    basis = np.zeros(m, dtype=int)
    need_art = []
    for ri in range(m):
        sc = std.slack_col[ri]
        if sc >= 0 and A[ri, sc] > 0:
            basis[ri] = sc
        else:
            need_art.append(ri)
    A1 = A
    if need_art:
        extra = np.zeros((m, len(need_art)))
        for k, ri in enumerate(need_art):
            extra[ri, k] = 1.0
            basis[ri] = n + k
            art_cols.append(n + k)
        A1 = np.hstack([A, extra])
    n1 = A1.shape[1]
    cap = 50 * (m + n1)
    c1 = np.zeros(n1)
    c1[n:] = 1.0

    tab = _Tableau(A1, b)
    tab.basis = basis
    tab.refactorize()
    tab.refactorizations = 0

    allowed = np.ones(n1, dtype=bool)
    pinned = np.zeros(n1, dtype=bool)
    scale = 1.0 + float(np.abs(b).max(initial=0.0))

    if need_art:
        status, _ = _run_phase(tab, c1, allowed, pinned, cap)
        if status != "optimal":
            raise SolverFailed("phase I cannot be unbounded")
        phase1_obj = float(c1[tab.basis] @ tab.xb)
        if phase1_obj > FEASIBILITY_TOL * scale:
            y1 = c1[tab.basis] @ tab.binv
            farkas = {con.name: float(std.row_sign[ri] * y1[ri])
                      for ri, con in enumerate(problem.constraints)}
            return LpSolution(LpStatus.INFEASIBLE, None, {}, {},
                              tab.pivots,
                              {"phase1_objective": phase1_obj,
                               "farkas": farkas,
                               "refactorizations": tab.refactorizations})

    # Phase II: true costs, artificial columns retired but possibly still
    # basic at zero; the pinned mask forces them out on contact.
    c2 = np.zeros(n1)
    c2[:n] = c
    allowed[n:] = False
    pinned[n:] = True
    for ri in range(m):
        if tab.basis[ri] >= n:
            tab.xb[ri] = 0.0

    status, j = _run_phase(tab, c2, allowed, pinned, cap)
    if status == "unbounded":
        d = tab.binv @ A1[:, j]
        ray = np.zeros(n)
        ray[j] = 1.0
        for ri in range(m):
            if tab.basis[ri] < n:
                ray[tab.basis[ri]] = -d[ri]
        user_ray: dict[str, float] = {v.name: 0.0 for v in problem.variables}
        for col, (ui, sign) in enumerate(std.cols):
            user_ray[problem.variables[ui].name] += sign * float(ray[col])
        return LpSolution(LpStatus.UNBOUNDED, None, {}, {}, tab.pivots,
                          {"ray": user_ray,
                           "refactorizations": tab.refactorizations})

    x = np.zeros(n1)
    x[tab.basis] = tab.xb
    values = std.shifts.copy()
    for col, (ui, sign) in enumerate(std.cols):
        values[ui] += sign * x[col]
    primal = {v.name: float(values[ui]) for ui, v in enumerate(problem.variables)}

    y = c2[tab.basis] @ tab.binv
    duals = {con.name: float(std.row_sign[ri] * y[ri])
             for ri, con in enumerate(problem.constraints)}
    objective = float(c @ x[:n]) + std.c0
    gap = abs(float(y @ b) + std.c0 - objective) / (1.0 + abs(objective))
    solution = LpSolution(LpStatus.OPTIMAL, objective, primal, duals, tab.pivots,
                          {"duality_gap": gap,
                           "refactorizations": tab.refactorizations,
                           "engine": "simplex"})
    report = check_solution(problem, solution)
    solution.diagnostics.update(report)
    if gap > DUALITY_GAP_TOL:
        raise SolverFailed(f"duality gap {gap:.3e} exceeds {DUALITY_GAP_TOL}")
    return solution
