"""Tour of the LP layer: build a problem, solve it twice, cross-check.

A two-generator dispatch toy is enough to show the whole surface: named
variables and rows, both solve engines, duals as prices, the exhaustive
vertex oracle, and the MPS writer.
"""

from bmlab.lp import (
    LpProblem,
    enumerate_vertices_oracle,
    export_mps,
    solve_highs,
    solve_simplex,
)

# Two units serve 120 MW; the cheap one is capped at 80 MW.
p = LpProblem("dispatch_toy")
g1 = p.add_variable(lower=0.0, upper=80.0, cost=12.0, name="g1")
g2 = p.add_variable(lower=0.0, upper=100.0, cost=31.0, name="g2")
p.add_constraint([(g1, 1.0), (g2, 1.0)], "==", 120.0, name="balance")

own = solve_simplex(p)
ref = solve_highs(p)
print(f"own simplex engine : {own.objective:10.2f}  {own.primal}")
print(f"scipy HiGHS engine : {ref.objective:10.2f}  {ref.primal}")

# The balance dual is the marginal price: one more MW costs the expensive
# unit's offer, since the cheap one is already full.
print(f"balance row dual   : {own.duals['balance']:10.2f}  (price set by g2)")

# For desk-sized instances an exhaustive enumeration of basic solutions
# gives an independent optimum to test against.
oracle = enumerate_vertices_oracle(p)
print(f"vertex enumeration : {oracle.objective:10.2f}  "
      f"(|diff| = {abs(oracle.objective - own.objective):.2e})")

print("\nMPS export:")
print(export_mps(p))
