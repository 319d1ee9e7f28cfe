"""Market-clearing LPs for three day-ahead market designs.

Five clearing engines over one physical model:

* ``clear_stochastic``: two-stage co-optimization of day-ahead dispatch and
  per-scenario recourse, minimizing expected cost over a scenario set.
* ``clear_det_cooptimization``: deterministic energy + reserve capacity
  clearing against forecast wind, with system-wide reserve requirements.
* ``clear_reserve_market``: stand-alone reserve capacity auction with
  per-area requirements and interconnector shares reserved for balancing.
* ``clear_energy_only_da``: energy-only day-ahead clearing that respects a
  previously cleared reserve schedule.
* ``clear_balancing``: per-scenario re-dispatch within procured reserve,
  with wind spillage and load shedding as last resorts.

Each clearing function has a ``build_*`` companion that returns the raw
``LpProblem``, used for MPS export and solver cross-checks.

Conventions shared by every model: the line-bus incidence is -1 where a
line leaves a bus and +1 where it enters, bus balance reads
``generation + sum_l A_ln f_l = demand``, AC flows couple to angles through
``f_l = B_l sum_n A_ln theta_n`` with the reference angle fixed at zero,
and HVDC flows are free decisions within capacity.  Down-regulation is
credited at the unit's energy price (the objective carries
``C_i (r+ - r-)``), and shed load costs the value of lost load.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import LpProblem, LpStatus, SolverFailed, solve
from .system import Line, Network
from .uncertainty import BetaMarginal, ReserveRequirements, ScenarioSet


class MarketError(ValueError):
    """Base class for clearing failures."""


class InfeasibleRequirements(MarketError):
    """Reserve requirements exceed what the fleet and grid can deliver."""


class InsufficientCapacity(MarketError):
    """Installed capacity cannot cover demand even before clearing."""


class ScenarioMismatch(MarketError):
    """Scenario set and network disagree about the wind farms."""


@dataclass
class DaSchedule:
    """Day-ahead clearing result.

    ``nodal_prices`` are the duals of the bus balance rows (cost of one more
    MW of demand at the bus).  ``reserve_up``/``reserve_down`` are filled by
    the co-optimized design and stay empty for energy-only clearing.
    """

    dispatch: dict[str, float]
    wind: dict[str, float]
    flows: dict[str, float]
    angles: dict[str, float]
    nodal_prices: dict[str, float]
    energy_cost: float
    reserve_up: dict[str, float] = field(default_factory=dict)
    reserve_down: dict[str, float] = field(default_factory=dict)
    reserve_cost: float = 0.0


@dataclass
class ReserveSchedule:
    """Outcome of the stand-alone reserve capacity auction.

    ``up`` and ``down`` are keyed by (unit id, area id): the capacity the
    unit holds for that area's requirement.  ``area_prices_*`` are the duals
    of the per-area requirement rows.
    """

    up: dict[tuple[str, str], float]
    down: dict[tuple[str, str], float]
    area_prices_up: dict[str, float]
    area_prices_down: dict[str, float]
    cost: float

    def up_total(self, unit_id: str) -> float:
        return sum(v for (u, _), v in self.up.items() if u == unit_id)

    def down_total(self, unit_id: str) -> float:
        return sum(v for (u, _), v in self.down.items() if u == unit_id)

    def cross_border_up(self) -> dict[tuple[str, str], float]:
        """Total up capacity sold across an area boundary, by (seller area,
        buyer area); filled in by the clearing function's diagnostics."""
        return dict(self._xb_up)

    def cross_border_down(self) -> dict[tuple[str, str], float]:
        return dict(self._xb_down)

    _xb_up: dict = field(default_factory=dict, repr=False)
    _xb_down: dict = field(default_factory=dict, repr=False)


@dataclass
class ScenarioBalancing:
    up: dict[str, float]
    down: dict[str, float]
    spill: dict[str, float]
    shed: dict[str, float]
    flows: dict[str, float]
    prices: dict[str, float]
    cost: float


@dataclass
class BalancingOutcome:
    per_scenario: list[ScenarioBalancing]
    expected_cost: float


@dataclass
class MarketOutcome:
    design: str
    total_cost: float
    components: dict[str, float]
    da: DaSchedule
    reserve: ReserveSchedule | None = None
    balancing: BalancingOutcome | None = None
    diagnostics: dict = field(default_factory=dict)


# -- shared construction pieces ------------------------------------------------


def _by_bus(network: Network):
    units = {b.id: [] for b in network.buses}
    farms = {b.id: [] for b in network.buses}
    for u in network.units:
        units[u.bus].append(u)
    for w in network.wind_farms:
        farms[w.bus].append(w)
    return units, farms


def _scenario_matrix(network: Network, scenarios: ScenarioSet) -> np.ndarray:
    """Scenario values reordered to the network's wind farm order."""
    ids = list(scenarios.farm_ids)
    want = [w.id for w in network.wind_farms]
    if sorted(ids) != sorted(want):
        raise ScenarioMismatch(
            f"scenario farms {ids} do not match network farms {want}")
    cols = [ids.index(w) for w in want]
    return np.asarray(scenarios.values)[:, cols]


def _check_adequacy(network: Network, wind_bound: dict[str, float]) -> None:
    supply = sum(u.capacity for u in network.units) + sum(wind_bound.values())
    if supply + 1e-9 < network.total_demand:
        raise InsufficientCapacity(
            f"installed capacity {supply:.1f} MW cannot cover demand "
            f"{network.total_demand:.1f} MW")


def _flow_capacity(line: Line, derate_reserved_share: bool) -> float:
    if derate_reserved_share:
        return line.capacity * (1.0 - line.x_share)
    return line.capacity


def _add_flows(lp: LpProblem, network: Network, tag: str,
               derate_reserved_share: bool = False):
    """Flow variables (and angles for AC lines) labelled by ``tag``.

    Returns (flow var by line id, angle var by bus id).  AC coupling rows are
    added here; the caller wires flows into the bus balances.
    """
    theta: dict[str, str] = {}
    if any(l.kind == "AC" for l in network.lines):
        for b in network.buses:
            if b.id == network.reference_bus:
                theta[b.id] = lp.add_variable(0.0, 0.0, name=f"th_{b.id}{tag}")
            else:
                theta[b.id] = lp.add_variable(-np.inf, np.inf,
                                              name=f"th_{b.id}{tag}")
    flows: dict[str, str] = {}
    for line in network.lines:
        cap = _flow_capacity(line, derate_reserved_share)
        fv = lp.add_variable(-cap, cap, name=f"f_{line.id}{tag}")
        flows[line.id] = fv
        if line.kind == "AC":
            lp.add_constraint(
                [(fv, 1.0),
                 (theta[line.to_bus], -line.susceptance),
                 (theta[line.from_bus], +line.susceptance)],
                "==", 0.0, name=f"ac_{line.id}{tag}")
    return flows, theta


def _flow_terms(network: Network, flows: dict[str, str], bus_id: str):
    """Incidence-signed flow terms for one bus balance row."""
    terms = []
    for line in network.lines:
        if line.to_bus == bus_id:
            terms.append((flows[line.id], +1.0))
        elif line.from_bus == bus_id:
            terms.append((flows[line.id], -1.0))
    return terms


def _forecast_bound(network: Network) -> dict[str, float]:
    """Deterministic designs schedule wind at its conditional mean."""
    return {w.id: BetaMarginal(w.alpha, w.beta).mean() * w.capacity
            for w in network.wind_farms}


def _solved(lp: LpProblem, engine: str, context: str):
    sol = solve(lp, engine=engine)
    if sol.status == LpStatus.INFEASIBLE:
        raise InfeasibleRequirements(f"{context}: no feasible clearing exists")
    if sol.status != LpStatus.OPTIMAL:
        raise SolverFailed(f"{context}: solver returned {sol.status}")
    return sol


def _get(sol, name: str) -> float:
    return sol.primal.get(name, 0.0)


# -- stochastic two-stage clearing ----------------------------------------------


def build_stochastic(network: Network,
                     scenarios: ScenarioSet) -> LpProblem:
    """The two-stage LP: day-ahead plus per-scenario recourse.

    Day-ahead wind may be scheduled up to installed capacity; every
    scenario gets re-dispatch within reserve capability, spillage,
    shedding, and its own network flows, all weighted by probability.
    """
    W = _scenario_matrix(network, scenarios)
    probs = np.asarray(scenarios.probabilities)
    units_at, farms_at = _by_bus(network)
    cap_bound = {w.id: w.capacity for w in network.wind_farms}
    _check_adequacy(network, cap_bound)

    lp = LpProblem("stochastic")
    p = {u.id: lp.add_variable(0.0, u.capacity, u.energy_price,
                               name=f"p_{u.id}")
         for u in network.units}
    pw = {w.id: lp.add_variable(0.0, cap_bound[w.id], 0.0, name=f"pW_{w.id}")
          for w in network.wind_farms}
    flows, theta = _add_flows(lp, network, "")
    for b in network.buses:
        terms = [(p[u.id], 1.0) for u in units_at[b.id]]
        terms += [(pw[w.id], 1.0) for w in farms_at[b.id]]
        terms += _flow_terms(network, flows, b.id)
        lp.add_constraint(terms, "==", b.demand, name=f"bal_{b.id}")

    farm_pos = {w.id: j for j, w in enumerate(network.wind_farms)}
    for s in range(scenarios.count):
        pi = float(probs[s])
        rp, rm, sp, sh = {}, {}, {}, {}
        for u in network.units:
            if u.reserve_up_max > 0:
                rp[u.id] = lp.add_variable(0.0, u.reserve_up_max,
                                           pi * u.energy_price,
                                           name=f"rUP_{u.id}_w{s}")
                lp.add_constraint([(p[u.id], 1.0), (rp[u.id], 1.0)],
                                  "<=", u.capacity)
            if u.reserve_down_max > 0:
                rm[u.id] = lp.add_variable(0.0, u.reserve_down_max,
                                           -pi * u.energy_price,
                                           name=f"rDN_{u.id}_w{s}")
                lp.add_constraint([(rm[u.id], 1.0), (p[u.id], -1.0)],
                                  "<=", 0.0)
        for w in network.wind_farms:
            realized = float(W[s, farm_pos[w.id]])
            if realized > 0:
                sp[w.id] = lp.add_variable(0.0, realized, 0.0,
                                           name=f"sp_{w.id}_w{s}")
        for b in network.buses:
            if b.demand > 0:
                sh[b.id] = lp.add_variable(0.0, b.demand, pi * network.voll,
                                           name=f"sh_{b.id}_w{s}")
        fs, _ = _add_flows(lp, network, f"_w{s}")
        for b in network.buses:
            terms = [(p[u.id], 1.0) for u in units_at[b.id]]
            terms += [(rp[u.id], 1.0) for u in units_at[b.id] if u.id in rp]
            terms += [(rm[u.id], -1.0) for u in units_at[b.id] if u.id in rm]
            terms += [(sp[w.id], -1.0) for w in farms_at[b.id] if w.id in sp]
            if b.id in sh:
                terms.append((sh[b.id], 1.0))
            terms += _flow_terms(network, fs, b.id)
            rhs = b.demand - sum(float(W[s, farm_pos[w.id]])
                                 for w in farms_at[b.id])
            lp.add_constraint(terms, "==", rhs, name=f"balw_{b.id}_w{s}")
    return lp


def clear_stochastic(network: Network, scenarios: ScenarioSet,
                     engine: str = "auto") -> MarketOutcome:
    """Co-optimize day-ahead dispatch and per-scenario recourse.

    Solves the LP from ``build_stochastic``; the objective is day-ahead
    cost plus probability-weighted recourse cost.  Scenario prices are the
    scenario balance duals divided by the scenario probability.
    """
    probs = np.asarray(scenarios.probabilities)
    lp = build_stochastic(network, scenarios)
    sol = _solved(lp, engine, "stochastic clearing")

    dispatch = {u.id: _get(sol, f"p_{u.id}") for u in network.units}
    da = DaSchedule(
        dispatch=dispatch,
        wind={w.id: _get(sol, f"pW_{w.id}") for w in network.wind_farms},
        flows={l.id: _get(sol, f"f_{l.id}") for l in network.lines},
        angles={b.id: _get(sol, f"th_{b.id}") for b in network.buses
                if f"th_{b.id}" in sol.primal},
        nodal_prices={b.id: sol.duals[f"bal_{b.id}"] for b in network.buses},
        energy_cost=sum(u.energy_price * dispatch[u.id]
                        for u in network.units),
    )
    per_scenario = []
    expected = 0.0
    for s in range(scenarios.count):
        up = {u.id: _get(sol, f"rUP_{u.id}_w{s}") for u in network.units
              if u.reserve_up_max > 0}
        dn = {u.id: _get(sol, f"rDN_{u.id}_w{s}") for u in network.units
              if u.reserve_down_max > 0}
        spill = {w.id: _get(sol, f"sp_{w.id}_w{s}") for w in network.wind_farms}
        shed = {b.id: _get(sol, f"sh_{b.id}_w{s}") for b in network.buses}
        cost = (sum(u.energy_price * (up.get(u.id, 0.0) - dn.get(u.id, 0.0))
                    for u in network.units)
                + network.voll * sum(shed.values()))
        pi = float(probs[s])
        per_scenario.append(ScenarioBalancing(
            up=up, down=dn, spill=spill, shed=shed,
            flows={l.id: _get(sol, f"f_{l.id}_w{s}") for l in network.lines},
            prices={b.id: sol.duals[f"balw_{b.id}_w{s}"] / pi
                    for b in network.buses},
            cost=cost))
        expected += pi * cost

    components = {"da_energy": da.energy_cost, "expected_balancing": expected}
    total = sol.objective
    _check_components(total, components)
    return MarketOutcome(
        design="stochastic", total_cost=total, components=components, da=da,
        balancing=BalancingOutcome(per_scenario, expected),
        diagnostics={"engine": sol.diagnostics.get("engine"),
                     "variables": lp.num_variables,
                     "constraints": lp.num_constraints})


# -- deterministic co-optimized clearing ------------------------------------------


def build_det_cooptimization(network: Network,
                             requirements: ReserveRequirements) -> LpProblem:
    """Joint energy and reserve capacity LP against forecast wind.

    Wind is scheduled at its conditional mean, reserve procurement must
    meet system-wide up and down requirements, and each unit's schedule
    leaves headroom (``p + R+ <= Pmax``) and footroom (``R- <= p``) for
    what it sells.
    """
    up_cap = sum(u.reserve_up_max for u in network.units)
    dn_cap = sum(u.reserve_down_max for u in network.units)
    shortfalls = []
    if requirements.up > up_cap + 1e-9:
        shortfalls.append(f"up requirement {requirements.up:.1f} MW exceeds "
                          f"offered capability {up_cap:.1f} MW")
    if requirements.down > dn_cap + 1e-9:
        shortfalls.append(f"down requirement {requirements.down:.1f} MW "
                          f"exceeds offered capability {dn_cap:.1f} MW")
    if shortfalls:
        raise InfeasibleRequirements("; ".join(shortfalls))

    units_at, farms_at = _by_bus(network)
    bound = _forecast_bound(network)
    _check_adequacy(network, bound)

    lp = LpProblem("det_coopt")
    p = {u.id: lp.add_variable(0.0, u.capacity, u.energy_price,
                               name=f"p_{u.id}")
         for u in network.units}
    pw = {w.id: lp.add_variable(0.0, bound[w.id], 0.0, name=f"pW_{w.id}")
          for w in network.wind_farms}
    rup, rdn = {}, {}
    for u in network.units:
        if u.reserve_up_max > 0:
            rup[u.id] = lp.add_variable(0.0, u.reserve_up_max,
                                        u.reserve_up_price,
                                        name=f"RUP_{u.id}")
            lp.add_constraint([(p[u.id], 1.0), (rup[u.id], 1.0)],
                              "<=", u.capacity)
        if u.reserve_down_max > 0:
            rdn[u.id] = lp.add_variable(0.0, u.reserve_down_max,
                                        u.reserve_down_price,
                                        name=f"RDN_{u.id}")
            lp.add_constraint([(rdn[u.id], 1.0), (p[u.id], -1.0)], "<=", 0.0)
    if requirements.up > 0:
        lp.add_constraint([(v, 1.0) for v in rup.values()], ">=",
                          requirements.up, name="rr_up")
    if requirements.down > 0:
        lp.add_constraint([(v, 1.0) for v in rdn.values()], ">=",
                          requirements.down, name="rr_dn")
    flows, theta = _add_flows(lp, network, "")
    for b in network.buses:
        terms = [(p[u.id], 1.0) for u in units_at[b.id]]
        terms += [(pw[w.id], 1.0) for w in farms_at[b.id]]
        terms += _flow_terms(network, flows, b.id)
        lp.add_constraint(terms, "==", b.demand, name=f"bal_{b.id}")
    return lp


def clear_det_cooptimization(network: Network,
                             requirements: ReserveRequirements,
                             engine: str = "auto") -> MarketOutcome:
    """Energy and reserve capacity cleared together against forecast wind.

    Solves the LP from ``build_det_cooptimization``.  Balancing against
    realized wind is a separate step (``clear_balancing``).
    """
    lp = build_det_cooptimization(network, requirements)
    sol = _solved(lp, engine, "deterministic co-optimization")

    dispatch = {u.id: _get(sol, f"p_{u.id}") for u in network.units}
    res_up = {u.id: _get(sol, f"RUP_{u.id}") for u in network.units
              if u.reserve_up_max > 0}
    res_dn = {u.id: _get(sol, f"RDN_{u.id}") for u in network.units
              if u.reserve_down_max > 0}
    energy = sum(u.energy_price * dispatch[u.id] for u in network.units)
    reserve = sum(u.reserve_up_price * res_up.get(u.id, 0.0)
                  + u.reserve_down_price * res_dn.get(u.id, 0.0)
                  for u in network.units)
    da = DaSchedule(
        dispatch=dispatch,
        wind={w.id: _get(sol, f"pW_{w.id}") for w in network.wind_farms},
        flows={l.id: _get(sol, f"f_{l.id}") for l in network.lines},
        angles={b.id: _get(sol, f"th_{b.id}") for b in network.buses
                if f"th_{b.id}" in sol.primal},
        nodal_prices={b.id: sol.duals[f"bal_{b.id}"] for b in network.buses},
        energy_cost=energy,
        reserve_up=res_up, reserve_down=res_dn, reserve_cost=reserve,
    )
    components = {"da_energy": energy, "reserve_capacity": reserve}
    _check_components(sol.objective, components)
    return MarketOutcome(
        design="det_coopt", total_cost=sol.objective, components=components,
        da=da,
        diagnostics={"engine": sol.diagnostics.get("engine"),
                     "reserve_price_up": sol.duals.get("rr_up", 0.0),
                     "reserve_price_down": sol.duals.get("rr_dn", 0.0)})


# -- stand-alone reserve capacity market --------------------------------------------


def _cross_border_caps(network: Network) -> dict[tuple[str, str], float]:
    """Reserved interconnector share between each ordered pair of areas."""
    caps: dict[tuple[str, str], float] = {}
    for a in network.areas:
        for b in network.areas:
            if a != b:
                caps[(a, b)] = 0.0
    for line in network.tie_lines():
        fa = network.area_of_bus(line.from_bus)
        ta = network.area_of_bus(line.to_bus)
        share = line.x_share * line.capacity
        caps[(fa, ta)] += share
        caps[(ta, fa)] += share
    return caps


def build_reserve_market(network: Network,
                         area_requirements: dict[str, ReserveRequirements]
                         ) -> LpProblem:
    """Reserve capacity auction LP with per-area requirements.

    Any unit may sell capacity toward any area's requirement, but sales that
    cross an area boundary are capped by the interconnector share reserved
    for balancing (``x_share * capacity`` summed over the ties between the
    two areas).  A unit's combined sales are limited by its offered
    capability per direction, and its up plus down sales by its size, so the
    subsequent energy-only clearing always has a nonempty dispatch interval.
    """
    missing = [a for a in area_requirements if a not in network.areas]
    if missing:
        raise MarketError(f"unknown areas in requirements: {missing}")
    xb = _cross_border_caps(network)
    area_of_unit = {u.id: network.area_of_bus(u.bus) for u in network.units}

    # quick necessary-condition screen with a pinpointed diagnosis
    shortfalls = []
    for a, rr in area_requirements.items():
        for direction, need in (("up", rr.up), ("down", rr.down)):
            attr = f"reserve_{direction}_max"
            internal = sum(getattr(u, attr) for u in network.units
                           if area_of_unit[u.id] == a)
            imports = 0.0
            for b in network.areas:
                if b == a:
                    continue
                pool = sum(getattr(u, attr) for u in network.units
                           if area_of_unit[u.id] == b)
                imports += min(pool, xb[(b, a)])
            if need > internal + imports + 1e-9:
                binding = ("interconnector balancing share"
                           if any(xb[(b, a)] < sum(getattr(u, attr)
                                                   for u in network.units
                                                   if area_of_unit[u.id] == b)
                                  for b in network.areas if b != a)
                           else "offered unit capability")
                shortfalls.append(
                    f"area {a} {direction} requirement {need:.1f} MW exceeds "
                    f"procurable {internal + imports:.1f} MW "
                    f"(internal {internal:.1f} + imports {imports:.1f}; "
                    f"limited by {binding})")
    if shortfalls:
        raise InfeasibleRequirements("; ".join(shortfalls))

    lp = LpProblem("reserve_market")
    vup: dict[tuple[str, str], str] = {}
    vdn: dict[tuple[str, str], str] = {}
    for u in network.units:
        for a in network.areas:
            if u.reserve_up_max > 0:
                vup[(u.id, a)] = lp.add_variable(
                    0.0, u.reserve_up_max, u.reserve_up_price,
                    name=f"RUP_{u.id}_a{a}")
            if u.reserve_down_max > 0:
                vdn[(u.id, a)] = lp.add_variable(
                    0.0, u.reserve_down_max, u.reserve_down_price,
                    name=f"RDN_{u.id}_a{a}")
    for u in network.units:
        ups = [(vup[(u.id, a)], 1.0) for a in network.areas
               if (u.id, a) in vup]
        dns = [(vdn[(u.id, a)], 1.0) for a in network.areas
               if (u.id, a) in vdn]
        if ups:
            lp.add_constraint(ups, "<=", u.reserve_up_max,
                              name=f"cap_up_{u.id}")
        if dns:
            lp.add_constraint(dns, "<=", u.reserve_down_max,
                              name=f"cap_dn_{u.id}")
        # headroom and footroom cannot overlap once energy is scheduled
        if ups and dns:
            lp.add_constraint(ups + dns, "<=", u.capacity,
                              name=f"cap_band_{u.id}")
    for a, rr in area_requirements.items():
        if rr.up > 0:
            lp.add_constraint([(v, 1.0) for (uid, aa), v in vup.items()
                               if aa == a], ">=", rr.up, name=f"rr_up_{a}")
        if rr.down > 0:
            lp.add_constraint([(v, 1.0) for (uid, aa), v in vdn.items()
                               if aa == a], ">=", rr.down, name=f"rr_dn_{a}")
    for b in network.areas:
        for a in network.areas:
            if a == b:
                continue
            up_terms = [(v, 1.0) for (uid, aa), v in vup.items()
                        if aa == a and area_of_unit[uid] == b]
            dn_terms = [(v, 1.0) for (uid, aa), v in vdn.items()
                        if aa == a and area_of_unit[uid] == b]
            if up_terms:
                lp.add_constraint(up_terms, "<=", xb[(b, a)],
                                  name=f"xb_up_{b}_{a}")
            if dn_terms:
                lp.add_constraint(dn_terms, "<=", xb[(b, a)],
                                  name=f"xb_dn_{b}_{a}")
    return lp


def clear_reserve_market(network: Network,
                         area_requirements: dict[str, ReserveRequirements],
                         engine: str = "auto") -> ReserveSchedule:
    """Solve the reserve capacity auction from ``build_reserve_market``."""
    lp = build_reserve_market(network, area_requirements)
    area_of_unit = {u.id: network.area_of_bus(u.bus) for u in network.units}
    sol = _solved(lp, engine, "reserve capacity market")

    up = {(u.id, a): sol.primal[f"RUP_{u.id}_a{a}"]
          for u in network.units for a in network.areas
          if f"RUP_{u.id}_a{a}" in sol.primal}
    dn = {(u.id, a): sol.primal[f"RDN_{u.id}_a{a}"]
          for u in network.units for a in network.areas
          if f"RDN_{u.id}_a{a}" in sol.primal}
    sched = ReserveSchedule(
        up=up, down=dn,
        area_prices_up={a: sol.duals.get(f"rr_up_{a}", 0.0)
                        for a in network.areas},
        area_prices_down={a: sol.duals.get(f"rr_dn_{a}", 0.0)
                          for a in network.areas},
        cost=sol.objective)
    for b in network.areas:
        for a in network.areas:
            if a == b:
                continue
            sched._xb_up[(b, a)] = sum(
                v for (uid, aa), v in up.items()
                if aa == a and area_of_unit[uid] == b)
            sched._xb_down[(b, a)] = sum(
                v for (uid, aa), v in dn.items()
                if aa == a and area_of_unit[uid] == b)
    return sched


# -- energy-only day-ahead clearing ----------------------------------------------


def build_energy_only_da(network: Network,
                         reserves: ReserveSchedule) -> LpProblem:
    """Energy-only LP that honors a cleared reserve schedule.

    Each unit's dispatch is squeezed into [down sales, capacity - up sales],
    and every line keeps its reserved balancing share out of the day-ahead
    market: flows are limited to ``(1 - x_share) * capacity``.
    """
    units_at, farms_at = _by_bus(network)
    bound = _forecast_bound(network)
    _check_adequacy(network, bound)

    lp = LpProblem("energy_only_da")
    p = {}
    for u in network.units:
        lo = reserves.down_total(u.id)
        hi = u.capacity - reserves.up_total(u.id)
        if lo > hi + 1e-9:
            raise InfeasibleRequirements(
                f"unit {u.id}: reserve sales ({lo:.1f} down, "
                f"{u.capacity - hi:.1f} up) leave no dispatch interval")
        p[u.id] = lp.add_variable(lo, max(lo, hi), u.energy_price,
                                  name=f"p_{u.id}")
    pw = {w.id: lp.add_variable(0.0, bound[w.id], 0.0, name=f"pW_{w.id}")
          for w in network.wind_farms}
    flows, theta = _add_flows(lp, network, "", derate_reserved_share=True)
    for b in network.buses:
        terms = [(p[u.id], 1.0) for u in units_at[b.id]]
        terms += [(pw[w.id], 1.0) for w in farms_at[b.id]]
        terms += _flow_terms(network, flows, b.id)
        lp.add_constraint(terms, "==", b.demand, name=f"bal_{b.id}")
    return lp


def clear_energy_only_da(network: Network, reserves: ReserveSchedule,
                         engine: str = "auto") -> DaSchedule:
    """Solve the energy-only clearing from ``build_energy_only_da``."""
    lp = build_energy_only_da(network, reserves)
    sol = _solved(lp, engine, "energy-only day-ahead clearing")

    dispatch = {u.id: _get(sol, f"p_{u.id}") for u in network.units}
    return DaSchedule(
        dispatch=dispatch,
        wind={w.id: _get(sol, f"pW_{w.id}") for w in network.wind_farms},
        flows={l.id: _get(sol, f"f_{l.id}") for l in network.lines},
        angles={b.id: _get(sol, f"th_{b.id}") for b in network.buses
                if f"th_{b.id}" in sol.primal},
        nodal_prices={b.id: sol.duals[f"bal_{b.id}"] for b in network.buses},
        energy_cost=sum(u.energy_price * dispatch[u.id]
                        for u in network.units))


# -- balancing against realized wind ------------------------------------------------


def build_balancing_scenario(network: Network, scenarios: ScenarioSet,
                             s: int, da: DaSchedule,
                             up_caps: dict[str, float],
                             dn_caps: dict[str, float]) -> LpProblem:
    """Re-dispatch LP for one realized scenario.

    Up/down regulation is bounded by ``up_caps`` and ``dn_caps`` (whatever
    the preceding market procured, with down moves further capped by the
    unit's dispatch), wind spillage up to the realization, load shedding
    at the value of lost load, and flows re-optimized within full line
    capacity.  The balance row is in deviation form: its right side is
    demand net of the day-ahead dispatch and the realized wind.
    """
    W = _scenario_matrix(network, scenarios)
    units_at, farms_at = _by_bus(network)
    farm_pos = {w.id: j for j, w in enumerate(network.wind_farms)}

    lp = LpProblem(f"balancing_w{s}")
    rp, rm, sp, sh = {}, {}, {}, {}
    for u in network.units:
        cap_up = up_caps.get(u.id, 0.0)
        cap_dn = min(dn_caps.get(u.id, 0.0), da.dispatch.get(u.id, 0.0))
        if cap_up > 0:
            rp[u.id] = lp.add_variable(0.0, cap_up, u.energy_price,
                                       name=f"rUP_{u.id}")
        if cap_dn > 0:
            rm[u.id] = lp.add_variable(0.0, cap_dn, -u.energy_price,
                                       name=f"rDN_{u.id}")
    for w in network.wind_farms:
        realized = float(W[s, farm_pos[w.id]])
        if realized > 0:
            sp[w.id] = lp.add_variable(0.0, realized, 0.0,
                                       name=f"sp_{w.id}")
    for b in network.buses:
        if b.demand > 0:
            sh[b.id] = lp.add_variable(0.0, b.demand, network.voll,
                                       name=f"sh_{b.id}")
    flows, _ = _add_flows(lp, network, "")
    for b in network.buses:
        terms = [(rp[u.id], 1.0) for u in units_at[b.id] if u.id in rp]
        terms += [(rm[u.id], -1.0) for u in units_at[b.id] if u.id in rm]
        terms += [(sp[w.id], -1.0) for w in farms_at[b.id] if w.id in sp]
        if b.id in sh:
            terms.append((sh[b.id], 1.0))
        terms += _flow_terms(network, flows, b.id)
        rhs = (b.demand
               - sum(da.dispatch.get(u.id, 0.0) for u in units_at[b.id])
               - sum(float(W[s, farm_pos[w.id]]) for w in farms_at[b.id]))
        lp.add_constraint(terms, "==", rhs, name=f"bal_{b.id}")
    return lp


def clear_balancing(network: Network, scenarios: ScenarioSet, da: DaSchedule,
                    up_caps: dict[str, float], dn_caps: dict[str, float],
                    engine: str = "auto") -> BalancingOutcome:
    """Per-scenario re-dispatch within procured reserve capacity.

    One LP per scenario (see ``build_balancing_scenario``), solved
    independently; the expectation is the probability-weighted sum of the
    scenario objectives.  Down-regulation is credited at the unit's energy
    price, so scenario costs may be negative.
    """
    probs = np.asarray(scenarios.probabilities)

    per_scenario = []
    expected = 0.0
    for s in range(scenarios.count):
        lp = build_balancing_scenario(network, scenarios, s, da, up_caps,
                                      dn_caps)
        sol = solve(lp, engine=engine)
        if sol.status != LpStatus.OPTIMAL:
            raise SolverFailed(
                f"balancing for scenario {s} returned {sol.status}")

        up = {u.id: sol.primal[f"rUP_{u.id}"] for u in network.units
              if f"rUP_{u.id}" in sol.primal}
        dn = {u.id: sol.primal[f"rDN_{u.id}"] for u in network.units
              if f"rDN_{u.id}" in sol.primal}
        spill = {w.id: _get(sol, f"sp_{w.id}") for w in network.wind_farms}
        shed = {b.id: _get(sol, f"sh_{b.id}") for b in network.buses}
        per_scenario.append(ScenarioBalancing(
            up=up, down=dn, spill=spill, shed=shed,
            flows={l.id: _get(sol, f"f_{l.id}") for l in network.lines},
            prices={b.id: sol.duals[f"bal_{b.id}"] for b in network.buses},
            cost=sol.objective))
        expected += float(probs[s]) * sol.objective

    return BalancingOutcome(per_scenario, expected)


def _check_components(total: float, components: dict[str, float]) -> None:
    gap = abs(total - sum(components.values()))
    if gap > 1e-6 * (1.0 + abs(total)):
        raise SolverFailed(
            f"cost components {components} do not add up to {total}")
