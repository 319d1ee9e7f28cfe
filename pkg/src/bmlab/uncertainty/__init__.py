"""Wind uncertainty: Beta marginals, Gaussian copula scenarios, reserve
requirements, and the special functions they stand on."""

from .model import (
    BetaMarginal,
    CopulaSpec,
    EmpiricalCdf,
    NotPositiveDefinite,
    ReserveRequirements,
    ScenarioSet,
    conditional_mean_forecast,
    portfolio_cdf,
    reserve_requirements,
    sample_scenarios,
)
from .special import (
    DomainError,
    beta_cdf,
    beta_inv_cdf,
    std_normal_cdf,
    std_normal_inv_cdf,
)

__all__ = [
    "BetaMarginal",
    "CopulaSpec",
    "DomainError",
    "EmpiricalCdf",
    "NotPositiveDefinite",
    "ReserveRequirements",
    "ScenarioSet",
    "beta_cdf",
    "beta_inv_cdf",
    "conditional_mean_forecast",
    "portfolio_cdf",
    "reserve_requirements",
    "sample_scenarios",
    "std_normal_cdf",
    "std_normal_inv_cdf",
]
