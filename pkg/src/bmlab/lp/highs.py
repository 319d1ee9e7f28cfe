"""Sparse backend on top of scipy's HiGHS interface.

Used for instances too large for the dense reference simplex.  The mapping
keeps the shared solution contract: duals are shadow prices with respect to
each constraint's right-hand side, so marginals of rows that were negated on
the way in ( ``>=`` rows become ``<=`` ) are negated on the way back.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .problem import LpProblem, LpSolution, LpStatus, SolverFailed, check_solution


def solve_highs(problem: LpProblem) -> LpSolution:
    nv = problem.num_variables
    cost = np.array([v.cost for v in problem.variables])
    bounds = [(v.lower if np.isfinite(v.lower) else None,
               v.upper if np.isfinite(v.upper) else None)
              for v in problem.variables]

    ub_names, ub_signs, ub_rhs = [], [], []
    eq_names, eq_rhs = [], []
    ub_data, ub_r, ub_c = [], [], []
    eq_data, eq_r, eq_c = [], [], []
    for con in problem.constraints:
        if con.sense == "==":
            ri = len(eq_rhs)
            eq_rhs.append(con.rhs)
            eq_names.append(con.name)
            for var, coef in con.coeffs.items():
                eq_r.append(ri); eq_c.append(problem.variable_index(var)); eq_data.append(coef)
        else:
            sign = 1.0 if con.sense == "<=" else -1.0
            ri = len(ub_rhs)
            ub_rhs.append(sign * con.rhs)
            ub_names.append(con.name)
            ub_signs.append(sign)
            for var, coef in con.coeffs.items():
                ub_r.append(ri); ub_c.append(problem.variable_index(var)); ub_data.append(sign * coef)

    A_ub = sp.csr_matrix((ub_data, (ub_r, ub_c)), shape=(len(ub_rhs), nv)) if ub_rhs else None
    A_eq = sp.csr_matrix((eq_data, (eq_r, eq_c)), shape=(len(eq_rhs), nv)) if eq_rhs else None

    res = linprog(cost, A_ub=A_ub, b_ub=ub_rhs or None,
                  A_eq=A_eq, b_eq=eq_rhs or None,
                  bounds=bounds, method="highs")
    if res.status == 2:
        # HiGHS presolve can report "infeasible" for problems that are in
        # fact unbounded; rerun without presolve to classify reliably.
        res = linprog(cost, A_ub=A_ub, b_ub=ub_rhs or None,
                      A_eq=A_eq, b_eq=eq_rhs or None,
                      bounds=bounds, method="highs",
                      options={"presolve": False})

    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, None, iterations=int(res.nit),
                          diagnostics={"engine": "highs", "message": res.message})
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, None, iterations=int(res.nit),
                          diagnostics={"engine": "highs", "message": res.message})
    if res.status != 0:
        raise SolverFailed(f"HiGHS returned status {res.status}: {res.message}")

    primal = {v.name: float(res.x[i]) for i, v in enumerate(problem.variables)}
    duals: dict[str, float] = {}
    if ub_rhs:
        for name, sign, marg in zip(ub_names, ub_signs, res.ineqlin.marginals):
            duals[name] = float(sign * marg)
    if eq_rhs:
        for name, marg in zip(eq_names, res.eqlin.marginals):
            duals[name] = float(marg)

    solution = LpSolution(LpStatus.OPTIMAL, float(res.fun), primal, duals,
                          int(res.nit), {"engine": "highs"})
    report = check_solution(problem, solution)
    solution.diagnostics.update(report)
    return solution
