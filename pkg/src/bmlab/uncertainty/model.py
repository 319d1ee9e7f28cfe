"""Wind uncertainty model: correlated Beta marginals and what follows.

Scenario generation draws a latent Gaussian vector X with the requested
correlation, maps it through the standard normal CDF to uniforms
Y = Phi(X), and pushes each coordinate through its farm's inverse Beta CDF,
scaled by installed capacity.  Latent noise is drawn from one PCG64 stream
per farm (stream j is seeded with ``spawn_key=(j,)`` off the base seed), and
the Cholesky factor mixes stream j only into farms j and later, so adding a
farm never disturbs the draws of existing ones.

Reserve requirements cover a central probability band of width xi: with
alpha_low = (1 - xi) / 2 and alpha_high = alpha_low + xi (the sum form keeps
alpha_high - alpha_low == xi exact in floating point),

    up   = (mean - quantile(alpha_low))  * capacity
    down = (quantile(alpha_high) - mean) * capacity

where the distribution is either a single farm's Beta marginal or the
Monte-Carlo CDF of a whole portfolio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .special import (
    DomainError,
    beta_cdf,
    beta_inv_cdf,
    std_normal_cdf,
    std_normal_inv_cdf,
)


class NotPositiveDefinite(ValueError):
    """Correlation matrix has no Cholesky factor."""


@dataclass(frozen=True)
class BetaMarginal:
    """Normalized production share of one farm: W / capacity ~ Beta(a, b)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"Beta parameters must be positive, got "
                              f"({self.alpha}, {self.beta})")

    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    def cdf(self, x):
        return beta_cdf(x, self.alpha, self.beta)

    def quantile(self, p):
        return beta_inv_cdf(p, self.alpha, self.beta)


@dataclass(frozen=True)
class CopulaSpec:
    """Gaussian copula over the farms' latent variables."""

    correlation: np.ndarray

    @classmethod
    def uniform(cls, n: int, rho: float) -> "CopulaSpec":
        """Equicorrelated matrix: rho off the diagonal, ones on it."""
        mat = np.full((n, n), float(rho))
        np.fill_diagonal(mat, 1.0)
        return cls(mat)

    def cholesky(self) -> np.ndarray:
        mat = np.asarray(self.correlation, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise NotPositiveDefinite("correlation must be a square matrix")
        if not np.allclose(mat, mat.T, atol=1e-12):
            raise NotPositiveDefinite("correlation matrix must be symmetric")
        try:
            return np.linalg.cholesky(mat)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc


@dataclass
class ScenarioSet:
    """Equiprobable joint wind realizations in MW, one row per scenario."""

    farm_ids: list[str]
    values: np.ndarray               # shape (count, farms), MW
    probabilities: np.ndarray        # shape (count,)
    seed: int | None = None

    @property
    def count(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path) -> None:
        """Write ``scenario,prob,<farm_id>...`` rows behind a seed comment."""
        lines = [f"# seed={self.seed}"]
        lines.append(",".join(["scenario", "prob"] + list(self.farm_ids)))
        for s in range(self.count):
            row = [str(s), repr(float(self.probabilities[s]))]
            row += [repr(float(v)) for v in self.values[s]]
            lines.append(",".join(row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "ScenarioSet":
        seed = None
        rows = []
        header = None
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    meta = line[1:].strip()
                    if meta.startswith("seed="):
                        text = meta[5:]
                        seed = None if text == "None" else int(text)
                    continue
                if header is None:
                    header = line.split(",")
                    continue
                rows.append(line.split(","))
        if header is None or header[:2] != ["scenario", "prob"]:
            raise ValueError(f"{path}: not a scenario CSV")
        farm_ids = header[2:]
        values = np.array([[float(v) for v in r[2:]] for r in rows])
        probs = np.array([float(r[1]) for r in rows])
        return cls(farm_ids, values, probs, seed)


@dataclass(frozen=True)
class ReserveRequirements:
    """Up/down reserve needs (MW) for one scope at band width xi."""

    up: float
    down: float
    xi: float
    alpha_low: float
    alpha_high: float


class EmpiricalCdf:
    """Sampled distribution with interpolated quantiles."""

    def __init__(self, samples: np.ndarray):
        self.samples = np.sort(np.asarray(samples, dtype=float))

    def mean(self) -> float:
        return float(self.samples.mean())

    def quantile(self, p):
        return float(np.quantile(self.samples, p))


def _latent_uniform(count: int, n_farms: int, copula: CopulaSpec,
                    seed: int) -> np.ndarray:
    """Correlated uniforms via the per-farm-stream scheme described above."""
    L = copula.cholesky()
    if L.shape[0] != n_farms:
        raise DomainError(f"copula is {L.shape[0]}-dimensional, "
                          f"need {n_farms}")
    z = np.empty((count, n_farms))
    for j in range(n_farms):
        stream = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(entropy=seed, spawn_key=(j,))))
        z[:, j] = stream.standard_normal(count)
    x = z @ L.T
    return std_normal_cdf(x)


def sample_scenarios(farm_ids: list[str], marginals: list[BetaMarginal],
                     capacities, copula: CopulaSpec, count: int,
                     seed: int) -> ScenarioSet:
    """Draw equiprobable correlated wind scenarios in MW.

    Deterministic in ``seed``; capacities only scale the normalized draws,
    so resampling after a capacity change reuses identical latent noise.
    """
    if count <= 0:
        raise DomainError(f"scenario count must be positive, got {count}")
    capacities = np.asarray(capacities, dtype=float)
    if np.any(capacities < 0):
        raise DomainError("capacities must be nonnegative")
    if not (len(farm_ids) == len(marginals) == capacities.size):
        raise DomainError("farm_ids, marginals, and capacities disagree in length")
    y = _latent_uniform(count, len(farm_ids), copula, seed)
    values = np.empty_like(y)
    for j, marg in enumerate(marginals):
        values[:, j] = beta_inv_cdf(y[:, j], marg.alpha, marg.beta) * capacities[j]
    probs = np.full(count, 1.0 / count)
    return ScenarioSet(list(farm_ids), values, probs, seed)


def portfolio_cdf(marginals: list[BetaMarginal], capacities,
                  copula: CopulaSpec, count: int = 100_000,
                  seed: int = 0) -> EmpiricalCdf:
    """Monte-Carlo CDF of total portfolio output (MW).

    The estimate is only trustworthy out to tail quantiles resolved by the
    sample; at least ten thousand draws are required.
    """
    if count < 10_000:
        raise DomainError(f"portfolio CDF needs >= 10000 samples, got {count}")
    scen = sample_scenarios([f"f{j}" for j in range(len(marginals))],
                            marginals, capacities, copula, count, seed)
    return EmpiricalCdf(scen.values.sum(axis=1))


def reserve_requirements(dist, capacity: float, xi: float) -> ReserveRequirements:
    """Band-coverage reserve needs; see the module docstring for the math.

    ``dist`` exposes ``mean()`` and ``quantile(p)``: pass a ``BetaMarginal``
    with the farm capacity, or an ``EmpiricalCdf`` of MW samples with
    capacity 1.
    """
    if not (0.0 < xi < 1.0):
        raise DomainError(f"xi must lie in (0, 1), got {xi}")
    alpha_low = (1.0 - xi) / 2.0
    alpha_high = alpha_low + xi  # difference is exactly xi
    mu = dist.mean()
    up = (mu - dist.quantile(alpha_low)) * capacity
    down = (dist.quantile(alpha_high) - mu) * capacity
    return ReserveRequirements(float(up), float(down), xi, alpha_low, alpha_high)


def conditional_mean_forecast(marginal: BetaMarginal, capacity: float) -> float:
    """Deterministic forecast used by the single-scenario market designs."""
    return marginal.mean() * capacity
