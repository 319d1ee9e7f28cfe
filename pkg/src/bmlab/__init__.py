"""bmlab: a market-clearing simulation lab for reserve procurement under
wind uncertainty.

Subpackages and modules:

- ``lp``: linear-program container, two solver engines, vertex-enumeration
  oracle, MPS export.
- ``uncertainty``: Beta marginals, Gaussian-copula scenario sampling,
  probabilistic reserve requirements.
- ``system``: network data model, case files, reserve offer policies.
- ``markets``: the five market-clearing problems (stochastic, co-optimized
  day-ahead, reserve capacity auction, energy-only day-ahead, balancing).
- ``evaluation``: expected-cost evaluation, penetration and transfer-capacity
  sweeps, report files.
- ``cli``: command-line front end.
"""

__version__ = "0.1.0"
