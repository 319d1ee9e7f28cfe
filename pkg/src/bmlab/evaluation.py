"""In-sample expected-cost evaluation and the two experiment sweeps.

Every question this module answers has the same shape: given a network, a
scenario set, and a market design, what does the design's schedule cost in
expectation when those same scenarios are settled at balancing?
``evaluate_design`` answers it once; the sweep functions organize the two
standard experiments on top of it, a cost curve over wind penetration and
a grid search over the interconnector balancing share X and the tie
capacity.

Reserve requirements for the deterministic designs are quantile bands of
the wind distribution.  An area holding a single farm gets the exact Beta
quantile; portfolios of several correlated farms have no closed form, so
their band comes from a Monte-Carlo CDF with a fixed internal seed that is
recorded in every report.

Grid cells are independent jobs.  With ``workers > 1`` they run on a
process pool and are merged by grid index, so outputs never depend on
completion order.  Wall-clock timings are kept on the in-memory result
only and never written to report files, which keeps reruns byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .markets import (
    MarketError,
    clear_balancing,
    clear_det_cooptimization,
    clear_energy_only_da,
    clear_reserve_market,
    clear_stochastic,
)
from .system import Network, apply_reserve_offer_policy, scale_wind_penetration
from .uncertainty import (
    BetaMarginal,
    CopulaSpec,
    ReserveRequirements,
    ScenarioSet,
    portfolio_cdf,
    reserve_requirements,
    sample_scenarios,
)

DESIGNS = ("stochastic", "det-coopt", "sequential")

# Monte-Carlo settings for portfolio quantiles; fixed so that requirement
# values are a pure function of the case file and xi.
QUANTILE_SAMPLES = 100_000
QUANTILE_SEED = 0

FLOAT_FORMAT = "%.9g"


def default_penetration_grid() -> tuple[float, ...]:
    return tuple(k / 20 for k in range(14))          # 0, 0.05, ..., 0.65


def default_x_grid() -> tuple[float, ...]:
    return tuple(k / 20 for k in range(21))          # 0, 0.05, ..., 1

def default_capacity_grid() -> tuple[float, ...]:
    return tuple(50.0 * k for k in range(1, 11))     # 50, 100, ..., 500


def with_x(network: Network, x: float) -> Network:
    """Copy of the network with every tie line's balancing share set to x."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"balancing share must lie in [0, 1], got {x}")
    ties = {l.id for l in network.tie_lines()}
    lines = tuple(replace(l, x_share=x) if l.id in ties else l
                  for l in network.lines)
    return replace(network, lines=lines)


def with_tie_capacity(network: Network, capacity: float) -> Network:
    """Copy of the network with every tie line's capacity set, in MW."""
    if capacity <= 0:
        raise ValueError(f"tie capacity must be positive, got {capacity}")
    ties = {l.id for l in network.tie_lines()}
    lines = tuple(replace(l, capacity=float(capacity)) if l.id in ties else l
                  for l in network.lines)
    return replace(network, lines=lines)


def generate_scenarios(network: Network, count: int, seed: int) -> ScenarioSet:
    """Equiprobable wind scenarios for the network's farm portfolio."""
    farms = network.wind_farms
    copula = CopulaSpec.uniform(len(farms), network.wind_correlation)
    return sample_scenarios([f.id for f in farms],
                            [BetaMarginal(f.alpha, f.beta) for f in farms],
                            [f.capacity for f in farms], copula, count, seed)


def _portfolio_requirements(farms, rho: float, xi: float, samples: int,
                            seed: int) -> ReserveRequirements:
    if not farms:
        lo = (1.0 - xi) / 2.0
        return ReserveRequirements(up=0.0, down=0.0, xi=xi,
                                   alpha_low=lo, alpha_high=lo + xi)
    if len(farms) == 1:
        f = farms[0]
        return reserve_requirements(BetaMarginal(f.alpha, f.beta),
                                    f.capacity, xi)
    cdf = portfolio_cdf([BetaMarginal(f.alpha, f.beta) for f in farms],
                        [f.capacity for f in farms],
                        CopulaSpec.uniform(len(farms), rho), samples, seed)
    return reserve_requirements(cdf, 1.0, xi)


def system_requirements(network: Network, xi: float, *,
                        samples: int = QUANTILE_SAMPLES,
                        seed: int = QUANTILE_SEED) -> ReserveRequirements:
    """System-wide reserve band covering a xi interval of total wind."""
    return _portfolio_requirements(network.wind_farms,
                                   network.wind_correlation, xi, samples,
                                   seed)


def area_requirements(network: Network, xi: float, *,
                      samples: int = QUANTILE_SAMPLES,
                      seed: int = QUANTILE_SEED
                      ) -> dict[str, ReserveRequirements]:
    """Per-area reserve bands, one per control area."""
    out = {}
    for area in network.areas:
        farms = [f for f in network.wind_farms
                 if network.area_of_bus(f.bus) == area]
        out[area] = _portfolio_requirements(farms, network.wind_correlation,
                                            xi, samples, seed)
    return out


@dataclass(frozen=True)
class EvaluationParams:
    """Knobs a single design evaluation needs beyond network and scenarios.

    ``x`` overrides the balancing share of every tie line when set.
    Requirements left as None are computed from the network's wind
    portfolio at reliability ``xi``.
    """
    xi: float = 0.99
    x: float | None = None
    requirements: ReserveRequirements | None = None
    area_requirements: dict[str, ReserveRequirements] | None = None
    engine: str = "auto"
    quantile_samples: int = QUANTILE_SAMPLES
    quantile_seed: int = QUANTILE_SEED


@dataclass
class DesignRun:
    """One design evaluated on one configuration.

    ``wall_clock_ms`` is a measurement, not part of the result; report
    writers skip it so identical inputs give identical files.
    """
    design: str
    digest: str
    da_energy: float
    reserve_capacity: float
    expected_balancing: float
    expected_total: float
    status: str = "ok"
    wall_clock_ms: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status == "ok"


def _run_digest(network: Network, scenarios: ScenarioSet, design: str,
                xi: float) -> str:
    payload = json.dumps({
        "design": design,
        "network": network.digest(),
        "scenario_seed": scenarios.seed,
        "scenario_count": scenarios.count,
        "xi": xi,
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def evaluate_design(network: Network, scenarios: ScenarioSet, design: str,
                    params: EvaluationParams = EvaluationParams()
                    ) -> DesignRun:
    """Clear one design and settle it against the same scenario set.

    The balancing stage always reuses ``scenarios``, so the reported
    expectation is in-sample by construction.  Infeasibility raised by any
    stage propagates with the stage named in the message.
    """
    if design not in DESIGNS:
        raise ValueError(f"unknown design {design!r}, expected one of "
                         f"{', '.join(DESIGNS)}")
    if params.x is not None:
        network = with_x(network, params.x)
    t0 = time.perf_counter()

    if design == "stochastic":
        out = clear_stochastic(network, scenarios, engine=params.engine)
        da = out.components["da_energy"]
        rc = 0.0
        bal = out.components["expected_balancing"]
    elif design == "det-coopt":
        req = params.requirements
        if req is None:
            req = system_requirements(network, params.xi,
                                      samples=params.quantile_samples,
                                      seed=params.quantile_seed)
        cleared = clear_det_cooptimization(network, req,
                                           engine=params.engine)
        settled = clear_balancing(network, scenarios, cleared.da,
                                  cleared.da.reserve_up,
                                  cleared.da.reserve_down,
                                  engine=params.engine)
        da = cleared.components["da_energy"]
        rc = cleared.components["reserve_capacity"]
        bal = settled.expected_cost
    else:
        areq = params.area_requirements
        if areq is None:
            areq = area_requirements(network, params.xi,
                                     samples=params.quantile_samples,
                                     seed=params.quantile_seed)
        rs = clear_reserve_market(network, areq, engine=params.engine)
        schedule = clear_energy_only_da(network, rs, engine=params.engine)
        up = {u.id: rs.up_total(u.id) for u in network.units}
        dn = {u.id: rs.down_total(u.id) for u in network.units}
        settled = clear_balancing(network, scenarios, schedule, up, dn,
                                  engine=params.engine)
        da = schedule.energy_cost
        rc = rs.cost
        bal = settled.expected_cost

    total = da + rc + bal
    ms = (time.perf_counter() - t0) * 1e3
    run = DesignRun(design=design,
                    digest=_run_digest(network, scenarios, design, params.xi),
                    da_energy=da, reserve_capacity=rc,
                    expected_balancing=bal, expected_total=total,
                    wall_clock_ms=ms)
    gap = abs(run.expected_total - (da + rc + bal))
    if gap > 1e-6 * (1.0 + abs(run.expected_total)):
        raise AssertionError(f"cost decomposition does not close: {gap}")
    return run


def _failed_run(network: Network, scenarios: ScenarioSet, design: str,
                xi: float, reason: str) -> DesignRun:
    inf = math.inf
    return DesignRun(design=design,
                     digest=_run_digest(network, scenarios, design, xi),
                     da_energy=inf, reserve_capacity=inf,
                     expected_balancing=inf, expected_total=inf,
                     status=f"infeasible: {reason}")


def _evaluate_cell(job):
    """Worker body: evaluate every design at one grid cell."""
    idx, network, scenarios, designs, params = job
    runs = {}
    for design in designs:
        try:
            runs[design] = evaluate_design(network, scenarios, design,
                                           params)
        except MarketError as exc:
            runs[design] = _failed_run(network, scenarios, design,
                                       params.xi, str(exc))
    return idx, runs


def _run_jobs(jobs, workers: int):
    if workers <= 1:
        results = map(_evaluate_cell, jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_cell, jobs))
    return {idx: runs for idx, runs in results}


@dataclass
class SweepResult:
    """A completed sweep: grid axes plus one DesignRun per cell per design.

    ``cells`` is keyed by the grid index tuple, one integer per axis in
    ``axes`` order.
    """
    kind: str
    axes: dict[str, tuple[float, ...]]
    designs: tuple[str, ...]
    cells: dict[tuple[int, ...], dict[str, DesignRun]]
    network_digest: str
    seed: int
    scenario_count: int
    xi: float
    policy: str | None
    settings: dict
    quantile_samples: int = QUANTILE_SAMPLES
    quantile_seed: int = QUANTILE_SEED

    def run(self, design: str, *idx: int) -> DesignRun:
        return self.cells[tuple(idx)][design]

    def cost(self, design: str, *idx: int) -> float:
        return self.cells[tuple(idx)][design].expected_total

    def failures(self) -> list[tuple[tuple[int, ...], str, str]]:
        out = []
        for idx in sorted(self.cells):
            for design in self.designs:
                r = self.cells[idx][design]
                if not r.feasible:
                    out.append((idx, design, r.status))
        return out

    def locus(self) -> list[tuple[float, float]]:
        """Least-cost balancing share per tie capacity, sequential design.

        Infeasible cells are skipped; exact ties resolve to the smaller X
        because the scan is ascending with a strict improvement test.  A
        capacity whose whole column is infeasible yields no entry.
        """
        if self.kind != "x-capacity":
            raise ValueError("locus is defined for x-capacity sweeps only")
        xs = self.axes["x"]
        caps = self.axes["capacity"]
        out = []
        for j, cap in enumerate(caps):
            best_x, best_cost = None, math.inf
            for i, x in enumerate(xs):
                r = self.cells[(i, j)].get("sequential")
                if r is None or not r.feasible:
                    continue
                if r.expected_total < best_cost:
                    best_x, best_cost = x, r.expected_total
            if best_x is not None:
                out.append((cap, best_x))
        return out


def sweep_penetration(network: Network, designs=DESIGNS, grid=None,
                      xi: float = 0.99, seed: int = 0, *, count: int = 100,
                      ratio: float = 2.0, policy: str | None = "baseline",
                      workers: int = 1, engine: str = "auto") -> SweepResult:
    """Expected-cost curve over installed wind penetration.

    Scenarios are regenerated at every grid point from the same seed, so
    the normalized draws are identical and only the capacity scaling
    differs between points.  Failures at a point are recorded on the cell
    and the sweep continues.
    """
    grid = tuple(grid) if grid is not None else default_penetration_grid()
    for p in grid:
        if not 0.0 <= p <= 0.7:
            raise ValueError(f"penetration {p} outside [0, 0.7]")
    base = apply_reserve_offer_policy(network, policy) if policy else network

    jobs = []
    for i, pen in enumerate(grid):
        scaled = scale_wind_penetration(base, pen, ratio=ratio)
        scen = generate_scenarios(scaled, count, seed)
        params = EvaluationParams(
            xi=xi, engine=engine,
            requirements=(system_requirements(scaled, xi)
                          if "det-coopt" in designs else None),
            area_requirements=(area_requirements(scaled, xi)
                               if "sequential" in designs else None))
        jobs.append(((i,), scaled, scen, tuple(designs), params))

    cells = _run_jobs(jobs, workers)
    return SweepResult(kind="penetration", axes={"penetration": grid},
                       designs=tuple(designs), cells=cells,
                       network_digest=network.digest(), seed=seed,
                       scenario_count=count, xi=xi, policy=policy,
                       settings={"ratio": ratio})


def sweep_x_capacity(network: Network, x_grid=None, capacity_grid=None,
                     penetration: float | None = 0.24, xi: float = 0.99,
                     seed: int = 0, *, count: int = 100,
                     ratio: float = 2.0, policy: str | None = "penalizing",
                     designs=("sequential",), workers: int = 1,
                     engine: str = "auto") -> SweepResult:
    """Grid search over the tie balancing share X and the tie capacity.

    Wind penetration is held fixed (None keeps the case's installed
    capacities as shipped), so one scenario set and one requirement
    computation serve every cell.  Infeasible cells carry an infinite
    cost and are excluded from the locus.
    """
    xs = tuple(x_grid) if x_grid is not None else default_x_grid()
    caps = (tuple(capacity_grid) if capacity_grid is not None
            else default_capacity_grid())
    for x in xs:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"balancing share {x} outside [0, 1]")
    for c in caps:
        if c <= 0:
            raise ValueError(f"tie capacity {c} must be positive")

    base = apply_reserve_offer_policy(network, policy) if policy else network
    if penetration is not None:
        base = scale_wind_penetration(base, penetration, ratio=ratio)
    scen = generate_scenarios(base, count, seed)
    params = EvaluationParams(
        xi=xi, engine=engine,
        requirements=(system_requirements(base, xi)
                      if "det-coopt" in designs else None),
        area_requirements=(area_requirements(base, xi)
                           if "sequential" in designs else None))

    jobs = []
    for j, cap in enumerate(caps):
        sized = with_tie_capacity(base, cap)
        for i, x in enumerate(xs):
            jobs.append(((i, j), with_x(sized, x), scen, tuple(designs),
                         params))

    cells = _run_jobs(jobs, workers)
    return SweepResult(kind="x-capacity", axes={"x": xs, "capacity": caps},
                       designs=tuple(designs), cells=cells,
                       network_digest=network.digest(), seed=seed,
                       scenario_count=count, xi=xi, policy=policy,
                       settings={"penetration": penetration, "ratio": ratio})


def _fmt(v: float) -> str:
    return FLOAT_FORMAT % v


def write_report(result: SweepResult, out_dir) -> list[Path]:
    """Write costs.csv, locus.csv, and meta.json into out_dir.

    Long format, one row per (cell, design); all floats carry 9
    significant digits.  The files are a pure function of the sweep
    inputs, timing data never lands in them.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    axis_names = list(result.axes)

    costs_path = out / "costs.csv"
    with costs_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["design", *axis_names, "da_energy", "reserve_capacity",
                    "expected_balancing", "expected_total", "status"])
        for idx in sorted(result.cells):
            coords = [result.axes[a][k] for a, k in zip(axis_names, idx)]
            for design in result.designs:
                r = result.cells[idx][design]
                w.writerow([design, *(_fmt(c) for c in coords),
                            _fmt(r.da_energy), _fmt(r.reserve_capacity),
                            _fmt(r.expected_balancing),
                            _fmt(r.expected_total), r.status])

    locus_path = out / "locus.csv"
    with locus_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["capacity", "x"])
        if result.kind == "x-capacity":
            for cap, x in result.locus():
                w.writerow([_fmt(cap), _fmt(x)])

    meta = {
        "kind": result.kind,
        "axes": {a: [float(_fmt(v)) for v in vs]
                 for a, vs in result.axes.items()},
        "designs": list(result.designs),
        "network_digest": result.network_digest,
        "scenario_seed": result.seed,
        "scenario_count": result.scenario_count,
        "xi": result.xi,
        "reserve_policy": result.policy,
        "settings": result.settings,
        "quantile_seed": result.quantile_seed,
        "quantile_samples": result.quantile_samples,
        "float_format": FLOAT_FORMAT,
        "tolerances": {"component_identity": 1e-6,
                       "dominance_relative": 1e-6},
        "failures": [{"design": design,
                      "coords": {a: float(_fmt(result.axes[a][k]))
                                 for a, k in zip(axis_names, idx)},
                      "status": status}
                     for idx, design, status in result.failures()],
        "files": ["costs.csv", "locus.csv"],
    }
    meta_path = out / "meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return [costs_path, locus_path, meta_path]
