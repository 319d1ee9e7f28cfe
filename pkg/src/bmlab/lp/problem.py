"""Container types for linear programs.

A problem is built incrementally: variables first, then constraints over
them.  Every solver backend consumes the same ``LpProblem`` and returns the
same ``LpSolution``, so model code never depends on which engine ran.

Dual values follow the shadow-price convention: the dual of a constraint is
the derivative of the optimal objective with respect to that constraint's
right-hand side.  For ``min x + y  s.t.  x + y >= 2`` the dual is +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

# Shared numerical tolerances.  Feasibility is absolute on constraint
# residuals; the reduced-cost tolerance drives simplex termination; the gap
# tolerance bounds |primal - dual| objective disagreement at optimality.
FEASIBILITY_TOL = 1e-7
REDUCED_COST_TOL = 1e-9
DUALITY_GAP_TOL = 1e-6


class LpError(Exception):
    """Base class for LP construction and solve failures."""


class InvalidBounds(LpError):
    """Lower bound exceeds upper bound, or a bound is NaN."""


class UnknownVariable(LpError):
    """A constraint references a variable id that was never added."""


class NonFiniteCoefficient(LpError):
    """A coefficient, objective cost, or right-hand side is NaN or infinite."""


class DuplicateName(LpError):
    """An explicit variable or constraint name was used twice."""


class CycleLimitExceeded(LpError):
    """Pivot count hit the safety cap.

    With Bland's rule the simplex cannot cycle, so reaching the cap signals
    a solver defect rather than a hard problem instance.
    """


class TooLarge(LpError):
    """Instance exceeds a backend's size precondition."""


class SolverFailed(LpError):
    """A backend returned an unusable or internally inconsistent result."""


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


_SENSES = ("<=", ">=", "==")


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float
    cost: float


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, float]  # variable name -> coefficient (duplicates summed)
    sense: str                # one of "<=", ">=", "=="
    rhs: float


@dataclass
class LpSolution:
    """Result of one solve.

    ``objective`` and the value maps are populated only when the status is
    optimal.  ``duals`` is keyed by constraint name (shadow-price sign
    convention, see module docstring).  ``diagnostics`` carries
    engine-specific extras: duality gap, refactorization count, and an
    infeasibility or unboundedness certificate when one is available.
    """

    status: LpStatus
    objective: float | None
    primal: dict[str, float] = field(default_factory=dict)
    duals: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


class LpProblem:
    """A linear program under construction.

    >>> lp = LpProblem("toy")
    >>> x = lp.add_variable(lower=0.0, upper=10.0, cost=1.0, name="x")
    >>> y = lp.add_variable(lower=0.0, upper=10.0, cost=1.0, name="y")
    >>> lp.add_constraint([(x, 1.0), (y, 1.0)], ">=", 2.0, name="demand")
    'demand'
    """

    def __init__(self, name: str = "lp"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self._var_index: dict[str, int] = {}
        self._con_index: dict[str, int] = {}

    # -- construction -----------------------------------------------------

    def add_variable(self, lower: float = 0.0, upper: float = math.inf,
                     cost: float = 0.0, name: str | None = None) -> str:
        if math.isnan(lower) or math.isnan(upper):
            raise InvalidBounds(f"NaN bound on variable {name!r}")
        if lower > upper:
            raise InvalidBounds(f"lower {lower} > upper {upper} on {name!r}")
        if not math.isfinite(cost):
            raise NonFiniteCoefficient(f"cost {cost} on variable {name!r}")
        if name is None:
            name = f"v{len(self.variables)}"
        if name in self._var_index:
            raise DuplicateName(f"variable {name!r} already added")
        self._var_index[name] = len(self.variables)
        self.variables.append(Variable(name, float(lower), float(upper), float(cost)))
        return name

    def add_constraint(self, terms, sense: str, rhs: float,
                       name: str | None = None) -> str:
        """Add ``sum(coef * var) sense rhs``.

        ``terms`` is an iterable of ``(variable_name, coefficient)`` pairs or
        an equivalent dict.  Repeated variable names have their coefficients
        summed.
        """
        if sense not in _SENSES:
            raise ValueError(f"sense must be one of {_SENSES}, got {sense!r}")
        if not math.isfinite(rhs):
            raise NonFiniteCoefficient(f"rhs {rhs} on constraint {name!r}")
        if isinstance(terms, dict):
            terms = terms.items()
        coeffs: dict[str, float] = {}
        for var, coef in terms:
            if var not in self._var_index:
                raise UnknownVariable(f"constraint {name!r} references {var!r}")
            if not math.isfinite(coef):
                raise NonFiniteCoefficient(f"coefficient {coef} on {var!r} in {name!r}")
            coeffs[var] = coeffs.get(var, 0.0) + float(coef)
        if name is None:
            name = f"c{len(self.constraints)}"
        if name in self._con_index:
            raise DuplicateName(f"constraint {name!r} already added")
        self._con_index[name] = len(self.constraints)
        self.constraints.append(Constraint(name, coeffs, sense, float(rhs)))
        return name

    # -- introspection ----------------------------------------------------

    def variable_index(self, name: str) -> int:
        return self._var_index[name]

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)


def check_solution(problem: LpProblem, solution: LpSolution,
                   feas_tol: float = FEASIBILITY_TOL) -> dict:
    """Validate an optimal solution against its problem.

    Returns a report with the worst primal residual, worst bound violation,
    and the complementary-slackness residual scaled by (1 + |objective|).
    Raises ``SolverFailed`` if feasibility is violated beyond ``feas_tol``.
    """
    if solution.status is not LpStatus.OPTIMAL:
        raise ValueError("check_solution expects an optimal solution")
    x = solution.primal
    worst_bound = 0.0
    for v in problem.variables:
        xi = x[v.name]
        worst_bound = max(worst_bound, v.lower - xi, xi - v.upper)
    worst_row = 0.0
    comp = 0.0
    scale = 1.0 + abs(solution.objective or 0.0)
    for con in problem.constraints:
        lhs = sum(coef * x[var] for var, coef in con.coeffs.items())
        slack = lhs - con.rhs
        if con.sense == "<=":
            worst_row = max(worst_row, slack)
        elif con.sense == ">=":
            worst_row = max(worst_row, -slack)
        else:
            worst_row = max(worst_row, abs(slack))
        dual = solution.duals.get(con.name, 0.0)
        if con.sense != "==":
            comp = max(comp, abs(dual * slack) / scale)
    obj = sum(v.cost * x[v.name] for v in problem.variables)
    obj_err = abs(obj - (solution.objective or 0.0)) / scale
    if worst_row > feas_tol or worst_bound > feas_tol:
        raise SolverFailed(
            f"solution of {problem.name!r} violates feasibility: "
            f"row residual {worst_row:.3e}, bound residual {worst_bound:.3e}")
    return {
        "row_residual": worst_row,
        "bound_residual": worst_bound,
        "complementarity": comp,
        "objective_error": obj_err,
    }
