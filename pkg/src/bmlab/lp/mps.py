"""Fixed-format MPS export.

Emits the classic section layout (NAME, ROWS, COLUMNS, RHS, BOUNDS, ENDATA)
with the objective as row ``COST``.  Field columns follow the traditional
fixed positions; when a name is longer than eight characters every name
field is widened uniformly so the file stays column-aligned and readable by
the common solvers, which accept wide fixed layouts.

Bound encoding per variable: default is ``[0, inf)`` and emits nothing;
free variables emit ``FR``; ``MI`` marks a missing lower bound; finite
bounds use ``LO`` / ``UP`` / ``FX``.
"""

from __future__ import annotations

import math

from .problem import LpProblem

_SENSE_TAG = {"<=": "L", ">=": "G", "==": "E"}


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def export_mps(problem: LpProblem, objective_name: str = "COST") -> str:
    width = max([8] + [len(v.name) for v in problem.variables]
                + [len(c.name) for c in problem.constraints]
                + [len(objective_name)])

    def pad(name: str) -> str:
        return name.ljust(width)

    lines = [f"NAME          {problem.name}"]
    lines.append("ROWS")
    lines.append(f" N  {objective_name}")
    for con in problem.constraints:
        lines.append(f" {_SENSE_TAG[con.sense]}  {con.name}")

    # Column-major entries: objective first, then each constraint in order.
    entries: dict[str, list[tuple[str, float]]] = {v.name: [] for v in problem.variables}
    for v in problem.variables:
        if v.cost != 0.0:
            entries[v.name].append((objective_name, v.cost))
    for con in problem.constraints:
        for var, coef in con.coeffs.items():
            if coef != 0.0:
                entries[var].append((con.name, coef))

    lines.append("COLUMNS")
    for v in problem.variables:
        pairs = entries[v.name]
        for k in range(0, len(pairs), 2):
            chunk = pairs[k:k + 2]
            fields = "".join(f"{pad(row)}  {_fmt(val):<12}  " for row, val in chunk)
            lines.append(f"    {pad(v.name)}  {fields}".rstrip())

    lines.append("RHS")
    for con in problem.constraints:
        if con.rhs != 0.0:
            lines.append(f"    {pad('RHS')}  {pad(con.name)}  {_fmt(con.rhs):<12}".rstrip())

    lines.append("BOUNDS")
    for v in problem.variables:
        free_low = v.lower == -math.inf
        free_high = v.upper == math.inf
        if free_low and free_high:
            lines.append(f" FR {pad('BND')}  {pad(v.name)}".rstrip())
        elif free_low:
            lines.append(f" MI {pad('BND')}  {pad(v.name)}".rstrip())
            lines.append(f" UP {pad('BND')}  {pad(v.name)}  {_fmt(v.upper):<12}".rstrip())
        else:
            if v.lower == v.upper:
                lines.append(f" FX {pad('BND')}  {pad(v.name)}  {_fmt(v.lower):<12}".rstrip())
                continue
            if v.lower != 0.0:
                lines.append(f" LO {pad('BND')}  {pad(v.name)}  {_fmt(v.lower):<12}".rstrip())
            if not free_high:
                lines.append(f" UP {pad('BND')}  {pad(v.name)}  {_fmt(v.upper):<12}".rstrip())

    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
