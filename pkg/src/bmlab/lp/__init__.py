"""Linear-programming core: problem container, solvers, oracle, MPS export.

``solve`` picks an engine by instance size: the dense two-phase reference
simplex for desk-scale problems, the sparse HiGHS backend above the
threshold.  Both honor the same solution contract, and an explicit
``engine=`` argument pins the choice.
"""

from __future__ import annotations

from .problem import (
    DUALITY_GAP_TOL,
    FEASIBILITY_TOL,
    REDUCED_COST_TOL,
    CycleLimitExceeded,
    DuplicateName,
    InvalidBounds,
    LpError,
    LpProblem,
    LpSolution,
    LpStatus,
    NonFiniteCoefficient,
    SolverFailed,
    TooLarge,
    UnknownVariable,
    check_solution,
)
from .highs import solve_highs
from .mps import export_mps
from .oracle import MAX_ORACLE_COLUMNS, OracleResult, enumerate_vertices_oracle
from .simplex import solve_simplex

# Above this size (variables + constraints) the dispatcher hands the problem
# to HiGHS; below it the dense reference simplex runs.
AUTO_ENGINE_CUTOFF = 250


def solve(problem: LpProblem, engine: str = "auto") -> LpSolution:
    """Solve a linear program.

    engine: "auto" (size-based dispatch), "simplex" (dense reference
    implementation), or "highs" (sparse backend).
    """
    if engine == "auto":
        size = problem.num_variables + problem.num_constraints
        engine = "simplex" if size <= AUTO_ENGINE_CUTOFF else "highs"
    if engine == "simplex":
        return solve_simplex(problem)
    if engine == "highs":
        return solve_highs(problem)
    raise ValueError(f"unknown engine {engine!r}")


__all__ = [
    "AUTO_ENGINE_CUTOFF",
    "DUALITY_GAP_TOL",
    "FEASIBILITY_TOL",
    "REDUCED_COST_TOL",
    "CycleLimitExceeded",
    "DuplicateName",
    "InvalidBounds",
    "LpError",
    "LpProblem",
    "LpSolution",
    "LpStatus",
    "MAX_ORACLE_COLUMNS",
    "NonFiniteCoefficient",
    "OracleResult",
    "SolverFailed",
    "TooLarge",
    "UnknownVariable",
    "check_solution",
    "enumerate_vertices_oracle",
    "export_mps",
    "solve",
    "solve_highs",
    "solve_simplex",
]
