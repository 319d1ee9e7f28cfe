"""Power-system data model and case-file handling.

A network is a set of buses grouped into areas, dispatchable units and wind
farms attached to buses, and AC or HVDC lines between buses.  Case files are
JSON documents (see ``docs/case-format.md``); loading validates the whole
file and reports every violation at once rather than stopping at the first.

Networks are immutable: the transformation helpers (reserve offer policies,
wind penetration scaling, zonal reduction) return new instances.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace

import numpy as np

TECHNOLOGIES = ("Nuclear", "Coal", "OCGT", "IGCC", "CCGT", "Other")

# Reserve offer policies: technology -> (capability share of P_max,
# capacity price as a fraction of the unit's energy price, both directions).
# Technologies absent from a table offer no reserve.
RESERVE_POLICIES = {
    "baseline": {
        "OCGT": (1.00, 0.25),
        "IGCC": (0.40, 0.10),
        "CCGT": (0.25, 0.05),
    },
    "penalizing": {
        "OCGT": (0.50, 0.15),
        "IGCC": (0.40, 0.30),
        "CCGT": (0.40, 0.30),
    },
}


class ParseError(ValueError):
    """Case file is not valid JSON or lacks the required structure."""


class ValidationError(ValueError):
    """Case data violates the schema; the message lists every violation."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid case:\n  " + "\n  ".join(self.violations))


class UnknownTechnology(ValidationError):
    """A unit carries a technology tag outside the supported set."""


@dataclass(frozen=True)
class Bus:
    id: str
    area: str
    demand: float


@dataclass(frozen=True)
class DispatchableUnit:
    id: str
    bus: str
    capacity: float
    energy_price: float
    technology: str
    reserve_up_max: float = 0.0
    reserve_down_max: float = 0.0
    reserve_up_price: float = 0.0
    reserve_down_price: float = 0.0


@dataclass(frozen=True)
class WindFarm:
    id: str
    bus: str
    capacity: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class Line:
    """AC lines couple flow to angles through ``susceptance``; DC flows are
    free decisions.  ``x_share`` is the fraction of capacity reserved for
    cross-border balancing in the sequential design."""

    id: str
    from_bus: str
    to_bus: str
    kind: str                      # "AC" or "DC"
    capacity: float
    susceptance: float = 0.0
    x_share: float = 0.0


@dataclass(frozen=True)
class Network:
    name: str
    areas: tuple[str, ...]
    buses: tuple[Bus, ...]
    units: tuple[DispatchableUnit, ...]
    wind_farms: tuple[WindFarm, ...]
    lines: tuple[Line, ...]
    voll: float
    reference_bus: str
    wind_correlation: float = 0.0

    # -- lookups ----------------------------------------------------------

    def bus_index(self, bus_id: str) -> int:
        return self._bus_map()[bus_id]

    def _bus_map(self) -> dict[str, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    def area_of_bus(self, bus_id: str) -> str:
        for b in self.buses:
            if b.id == bus_id:
                return b.area
        raise KeyError(bus_id)

    def incidence(self) -> np.ndarray:
        """Line-by-bus incidence: -1 where a line leaves, +1 where it enters."""
        A = np.zeros((len(self.lines), len(self.buses)))
        bmap = self._bus_map()
        for li, line in enumerate(self.lines):
            A[li, bmap[line.from_bus]] = -1.0
            A[li, bmap[line.to_bus]] = +1.0
        return A

    def tie_lines(self) -> list[Line]:
        """Lines whose endpoints lie in different areas."""
        return [l for l in self.lines
                if self.area_of_bus(l.from_bus) != self.area_of_bus(l.to_bus)]

    @property
    def total_demand(self) -> float:
        return sum(b.demand for b in self.buses)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "areas": list(self.areas),
            "voll": self.voll,
            "reference_bus": self.reference_bus,
            "wind_correlation": self.wind_correlation,
            "buses": [{"id": b.id, "area": b.area, "demand": b.demand}
                      for b in self.buses],
            "units": [{"id": u.id, "bus": u.bus, "capacity": u.capacity,
                       "energy_price": u.energy_price, "technology": u.technology,
                       "reserve_up_max": u.reserve_up_max,
                       "reserve_down_max": u.reserve_down_max,
                       "reserve_up_price": u.reserve_up_price,
                       "reserve_down_price": u.reserve_down_price}
                      for u in self.units],
            "wind_farms": [{"id": w.id, "bus": w.bus, "capacity": w.capacity,
                            "alpha": w.alpha, "beta": w.beta}
                           for w in self.wind_farms],
            "lines": [{"id": l.id, "from": l.from_bus, "to": l.to_bus,
                       "kind": l.kind, "capacity": l.capacity,
                       "susceptance": l.susceptance, "x_share": l.x_share}
                      for l in self.lines],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# -- loading and validation ------------------------------------------------

def _require(entry: dict, key: str, context: str, violations: list[str]):
    if key not in entry:
        violations.append(f"{context}: missing field {key!r}")
        return None
    return entry[key]


def load_system(path) -> Network:
    """Load and validate a JSON case file.

    Raises ``ParseError`` for malformed JSON (with line and column),
    ``UnknownTechnology`` when a unit's technology tag is unsupported, and
    ``ValidationError`` listing every schema violation otherwise.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return network_from_dict(raw)


def network_from_dict(raw: dict) -> Network:
    v: list[str] = []
    unknown_tech = False

    name = raw.get("name", "unnamed")
    areas = raw.get("areas") or []
    if not areas:
        v.append("areas: at least one area is required")
    if len(set(areas)) != len(areas):
        v.append("areas: duplicate area ids")

    buses = []
    for i, entry in enumerate(raw.get("buses") or []):
        ctx = f"buses[{i}]"
        bid = _require(entry, "id", ctx, v)
        area = _require(entry, "area", ctx, v)
        demand = entry.get("demand", 0.0)
        if demand is None or not math.isfinite(demand) or demand < 0:
            v.append(f"{ctx}: demand must be finite and nonnegative")
            demand = 0.0
        if area is not None and area not in areas:
            v.append(f"{ctx}: area {area!r} not listed in areas")
        buses.append(Bus(str(bid), str(area), float(demand)))
    if not buses:
        v.append("buses: at least one bus is required")
    bus_ids = [b.id for b in buses]
    if len(set(bus_ids)) != len(bus_ids):
        v.append("buses: duplicate bus ids")
    covered = {b.area for b in buses}
    for a in areas:
        if a not in covered:
            v.append(f"areas: area {a!r} has no buses")

    units = []
    for i, entry in enumerate(raw.get("units") or []):
        ctx = f"units[{i}]"
        uid = _require(entry, "id", ctx, v)
        bus = _require(entry, "bus", ctx, v)
        cap = _require(entry, "capacity", ctx, v) or 0.0
        price = entry.get("energy_price", 0.0)
        tech = entry.get("technology", "Other")
        if tech not in TECHNOLOGIES:
            v.append(f"{ctx}: unknown technology {tech!r} "
                     f"(supported: {', '.join(TECHNOLOGIES)})")
            unknown_tech = True
        if bus is not None and bus not in bus_ids:
            v.append(f"{ctx}: bus {bus!r} does not exist")
        if not math.isfinite(cap) or cap < 0:
            v.append(f"{ctx}: capacity must be finite and nonnegative")
            cap = 0.0
        if not math.isfinite(price):
            v.append(f"{ctx}: energy_price must be finite")
            price = 0.0
        rup = entry.get("reserve_up_max", 0.0)
        rdn = entry.get("reserve_down_max", 0.0)
        pup = entry.get("reserve_up_price", 0.0)
        pdn = entry.get("reserve_down_price", 0.0)
        for fname, val in (("reserve_up_max", rup), ("reserve_down_max", rdn)):
            if not math.isfinite(val) or val < 0 or val > cap + 1e-9:
                v.append(f"{ctx}: {fname} must lie in [0, capacity]")
        for fname, val in (("reserve_up_price", pup), ("reserve_down_price", pdn)):
            if not math.isfinite(val) or val < 0:
                v.append(f"{ctx}: {fname} must be finite and nonnegative")
        units.append(DispatchableUnit(str(uid), str(bus), float(cap), float(price),
                                      str(tech), float(rup), float(rdn),
                                      float(pup), float(pdn)))
    unit_ids = [u.id for u in units]
    if len(set(unit_ids)) != len(unit_ids):
        v.append("units: duplicate unit ids")

    farms = []
    for i, entry in enumerate(raw.get("wind_farms") or []):
        ctx = f"wind_farms[{i}]"
        wid = _require(entry, "id", ctx, v)
        bus = _require(entry, "bus", ctx, v)
        cap = _require(entry, "capacity", ctx, v) or 0.0
        alpha = _require(entry, "alpha", ctx, v) or 1.0
        beta = _require(entry, "beta", ctx, v) or 1.0
        if bus is not None and bus not in bus_ids:
            v.append(f"{ctx}: bus {bus!r} does not exist")
        if not math.isfinite(cap) or cap < 0:
            v.append(f"{ctx}: capacity must be finite and nonnegative")
            cap = 0.0
        if not (alpha > 0 and beta > 0):
            v.append(f"{ctx}: Beta shape parameters must be positive")
            alpha, beta = 1.0, 1.0
        farms.append(WindFarm(str(wid), str(bus), float(cap),
                              float(alpha), float(beta)))
    farm_ids = [w.id for w in farms]
    if len(set(farm_ids)) != len(farm_ids):
        v.append("wind_farms: duplicate farm ids")

    lines = []
    for i, entry in enumerate(raw.get("lines") or []):
        ctx = f"lines[{i}]"
        lid = _require(entry, "id", ctx, v)
        fbus = _require(entry, "from", ctx, v)
        tbus = _require(entry, "to", ctx, v)
        kind = entry.get("kind", "AC")
        cap = _require(entry, "capacity", ctx, v) or 0.0
        susc = entry.get("susceptance", 0.0)
        x_share = entry.get("x_share", 0.0)
        if kind not in ("AC", "DC"):
            v.append(f"{ctx}: kind must be 'AC' or 'DC', got {kind!r}")
            kind = "AC"
        for bref in (fbus, tbus):
            if bref is not None and bref not in bus_ids:
                v.append(f"{ctx}: bus {bref!r} does not exist")
        if fbus == tbus:
            v.append(f"{ctx}: line endpoints coincide")
        if not math.isfinite(cap) or cap < 0:
            v.append(f"{ctx}: capacity must be finite and nonnegative")
            cap = 0.0
        if kind == "AC" and not (susc > 0):
            v.append(f"{ctx}: AC lines need positive susceptance")
            susc = 1.0
        if not (0.0 <= x_share <= 1.0):
            v.append(f"{ctx}: x_share must lie in [0, 1]")
            x_share = 0.0
        lines.append(Line(str(lid), str(fbus), str(tbus), str(kind),
                          float(cap), float(susc), float(x_share)))
    line_ids = [l.id for l in lines]
    if len(set(line_ids)) != len(line_ids):
        v.append("lines: duplicate line ids")

    voll = raw.get("voll")
    if voll is None or not math.isfinite(voll) or voll <= 0:
        v.append("voll: must be a positive number")
        voll = 1000.0
    ref = raw.get("reference_bus")
    if ref is None or ref not in bus_ids:
        v.append(f"reference_bus: {ref!r} does not exist")
        ref = bus_ids[0] if bus_ids else ""
    rho = raw.get("wind_correlation", 0.0)
    if not (-1.0 <= rho <= 1.0):
        v.append("wind_correlation: must lie in [-1, 1]")
        rho = 0.0

    # Connectivity over the union of AC and DC lines.
    if buses and not v:
        parent = {b.id: b.id for b in buses}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for line in lines:
            parent[find(line.from_bus)] = find(line.to_bus)
        roots = {find(b.id) for b in buses}
        if len(roots) > 1:
            v.append(f"network is disconnected ({len(roots)} components)")

    if v:
        if unknown_tech:
            raise UnknownTechnology(v)
        raise ValidationError(v)

    return Network(name=name, areas=tuple(areas), buses=tuple(buses),
                   units=tuple(units), wind_farms=tuple(farms),
                   lines=tuple(lines), voll=float(voll), reference_bus=ref,
                   wind_correlation=float(rho))


# -- transformations --------------------------------------------------------

def apply_reserve_offer_policy(network: Network, policy: str) -> Network:
    """Overwrite every unit's reserve capability and capacity price.

    ``policy`` names a table in ``RESERVE_POLICIES``.  Shares apply to unit
    capacity, prices to the unit's energy price, identically up and down;
    technologies outside the table offer nothing.  Idempotent, since the
    result depends only on capacity and energy price.
    """
    key = policy.lower()
    if key not in RESERVE_POLICIES:
        raise ValueError(f"unknown reserve offer policy {policy!r} "
                         f"(have: {', '.join(sorted(RESERVE_POLICIES))})")
    table = RESERVE_POLICIES[key]
    units = []
    for u in network.units:
        share, price_frac = table.get(u.technology, (0.0, 0.0))
        units.append(replace(
            u,
            reserve_up_max=share * u.capacity,
            reserve_down_max=share * u.capacity,
            reserve_up_price=price_frac * u.energy_price,
            reserve_down_price=price_frac * u.energy_price,
        ))
    return replace(network, units=tuple(units))


def scale_wind_penetration(network: Network, penetration: float,
                           ratio: float = 2.0) -> Network:
    """Set total wind capacity to ``penetration * total_demand``.

    Capacity is split ``ratio : 1`` between the first and second area in the
    network's area order.  Requires a two-area network with exactly one farm
    per area (the layout of the shipped studies).
    """
    if penetration < 0:
        raise ValueError(f"penetration must be nonnegative, got {penetration}")
    if ratio <= 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    if len(network.areas) != 2:
        raise ValueError("penetration scaling needs exactly two areas")
    farm_area = {w.id: network.area_of_bus(w.bus) for w in network.wind_farms}
    by_area: dict[str, list[WindFarm]] = {a: [] for a in network.areas}
    for w in network.wind_farms:
        by_area[farm_area[w.id]].append(w)
    for a, group in by_area.items():
        if len(group) != 1:
            raise ValueError(f"area {a!r} must hold exactly one wind farm, "
                             f"has {len(group)}")
    total = penetration * network.total_demand
    shares = {network.areas[0]: ratio / (1.0 + ratio),
              network.areas[1]: 1.0 / (1.0 + ratio)}
    farms = tuple(replace(w, capacity=total * shares[farm_area[w.id]])
                  for w in network.wind_farms)
    return replace(network, wind_farms=farms)


def reduce_to_zones(network: Network) -> Network:
    """Collapse each area to a single bus.

    Demands are summed per area, units and farms move to their area's bus,
    intra-area lines disappear, and inter-area lines keep their properties
    with endpoints remapped.  The reference bus becomes the bus of the area
    that held the original one.
    """
    demand = {a: 0.0 for a in network.areas}
    for b in network.buses:
        demand[b.area] += b.demand
    buses = tuple(Bus(a, a, demand[a]) for a in network.areas)
    area_of = {b.id: b.area for b in network.buses}
    units = tuple(replace(u, bus=area_of[u.bus]) for u in network.units)
    farms = tuple(replace(w, bus=area_of[w.bus]) for w in network.wind_farms)
    lines = tuple(replace(l, from_bus=area_of[l.from_bus],
                          to_bus=area_of[l.to_bus])
                  for l in network.lines
                  if area_of[l.from_bus] != area_of[l.to_bus])
    return replace(network, buses=buses, units=units, wind_farms=farms,
                   lines=lines, reference_bus=area_of[network.reference_bus])
