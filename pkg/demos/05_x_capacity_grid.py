"""How much tie-line capacity should the balancing stage keep?

In the sequential design a share X of each tie line is walled off for
reserve exchange and the energy market keeps the rest.  This grid search
prices that split: expected cost over (X, capacity) cells, then the
locus of the cheapest X per capacity.

Two acts.  On the two-zone case every area can place its own band, so
any reserved slice just derates the energy market and the locus pins at
X = 0.  Then a doctored small case where one area cannot cover its up
requirement locally: X = 0 turns infeasible, X = 1 strands a down band
behind the walled tie, and the cheapest split sits strictly inside.

Coarse grids and 25 scenarios keep the demo quick.
"""

import json
from pathlib import Path

from bmlab.evaluation import sweep_x_capacity
from bmlab.system import load_system, network_from_dict

ROOT = Path(__file__).resolve().parents[1]


def show(result, xs, caps):
    print(f"{'X':>5}  " + " ".join(f"{c:>9.0f}" for c in caps))
    for i, x in enumerate(xs):
        row = []
        for j in range(len(caps)):
            run = result.run("sequential", i, j)
            row.append(f"{run.expected_total:>9.1f}" if run.feasible
                       else f"{'infeas':>9}")
        print(f"{x:>5.2f}  " + " ".join(row))
    print("cheapest X per capacity: "
          + ", ".join(f"{cap:.0f} MW -> {x:.2f}" for cap, x in result.locus()))


# -- act one: self-sufficient areas --------------------------------------------

net = load_system(ROOT / "cases" / "two_zone.json")
xs = (0.0, 0.25, 0.5, 0.75, 1.0)
caps = (50.0, 100.0, 200.0, 400.0)

print("two-zone case, 24% penetration:\n")
show(sweep_x_capacity(net, xs, caps, penetration=0.24, seed=11, count=25),
     xs, caps)
print("\nboth areas can place their own bands, so every reserved slice is "
      "pure loss\nto the energy market and the locus collapses to X = 0.\n")

# -- act two: an area that cannot serve its own requirement ---------------------

case = json.loads((ROOT / "cases" / "micro.json").read_text())
case["wind_farms"].append({"id": "w2", "bus": "n2", "capacity": 25.0,
                           "alpha": 5.67, "beta": 6.48})
for u in case["units"]:
    if u["id"] == "gB":
        u["reserve_up_max"] = 5.0   # too little for a2's wind band
doctored = network_from_dict(case)

caps = (50.0, 200.0)
print("doctored micro case (a2 short of up reserve), case capacities:\n")
# policy=None keeps the doctored offer caps instead of overwriting them
show(sweep_x_capacity(doctored, xs, caps, penetration=None, seed=11,
                      count=25, policy=None), xs, caps)
print("\nX = 0 cannot import a2's band, X = 1 strands a1's down band behind "
      "the wall,\nand the best split sits strictly inside the interval.")
