"""Wind uncertainty from the ground up.

Each farm's production share follows a Beta distribution; a Gaussian
copula couples the farms.  Reserve requirements are the quantile band of
the resulting production around its mean.  This script draws a large
sample and shows the analytic band and the sampled one landing on top of
each other.
"""

import numpy as np

from bmlab.uncertainty import (
    BetaMarginal,
    CopulaSpec,
    EmpiricalCdf,
    reserve_requirements,
    sample_scenarios,
)

m1 = BetaMarginal(3.78, 1.62)   # windy site, mean share 0.70
m2 = BetaMarginal(5.67, 6.48)   # calmer site, mean share 0.47
print(f"marginal means: {m1.mean():.3f}, {m2.mean():.3f}")

rho = 0.35
scen = sample_scenarios(["w1", "w2"], [m1, m2], [1.0, 1.0],
                        CopulaSpec.uniform(2, rho),
                        count=100_000, seed=0)
values = np.asarray(scen.values)

# Rank-ish check of the dependence: correlation of the normalized draws.
sample_corr = float(np.corrcoef(values[:, 0], values[:, 1])[0, 1])
print(f"latent rho {rho:.2f} -> production correlation {sample_corr:.3f}")

# Requirements cover the central 99% of production around the mean:
# up reserve for shortfalls, down reserve for surpluses, per unit of
# installed capacity here.
for name, marginal, col in (("w1", m1, 0), ("w2", m2, 1)):
    analytic = reserve_requirements(marginal, 1.0, 0.99)
    sampled = reserve_requirements(EmpiricalCdf(values[:, col]), 1.0, 0.99)
    print(f"{name}: up {analytic.up:.4f} (sampled {sampled.up:.4f})  "
          f"down {analytic.down:.4f} (sampled {sampled.down:.4f})")

# The band is lopsided: a high-mean farm has more room to fall than to
# rise, so its up requirement dwarfs its down requirement.
band = reserve_requirements(m1, 1.0, 0.99)
print(f"\nw1 asymmetry: up/down = {band.up / band.down:.2f}")
