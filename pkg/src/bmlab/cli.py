"""Command-line front end for the market-clearing laboratory.

Subcommands:

* ``scenario-gen``: draw a wind scenario set from a case file, save as CSV.
* ``clear``: clear one market design, write the full outcome as JSON.
* ``evaluate``: clear one design and settle it in-sample, write the cost
  decomposition as JSON.
* ``sweep``: run a penetration or x-capacity experiment into a report
  directory (costs.csv, locus.csv, meta.json).
* ``export-mps``: write the design's LP stages as MPS files.

Exit codes are 0 on success, 1 on runtime failures (infeasible markets,
solver trouble, unwritable output), and 2 on usage or validation errors.
stdout only ever carries the paths of files this tool wrote; diagnostics
go to stderr.

Seeds come from ``--seed`` with the ``BML_SEED`` environment variable as
fallback; a command that needs randomness and finds neither is a usage
error, never a silent default.  Flags that shadow case-file values
(``--x``, ``--voll``) and the requirement reliability ``--xi`` always win
over the file.  All paths are interpreted relative to the working
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .evaluation import (
    EvaluationParams,
    area_requirements,
    evaluate_design,
    generate_scenarios,
    sweep_penetration,
    sweep_x_capacity,
    system_requirements,
    with_x,
    write_report,
)
from .lp import SolverFailed, export_mps
from .markets import (
    MarketError,
    build_balancing_scenario,
    build_det_cooptimization,
    build_energy_only_da,
    build_reserve_market,
    build_stochastic,
    clear_balancing,
    clear_det_cooptimization,
    clear_energy_only_da,
    clear_reserve_market,
    clear_stochastic,
    _cross_border_caps,
)
from .system import (
    ParseError,
    RESERVE_POLICIES,
    ValidationError,
    apply_reserve_offer_policy,
    load_system,
    scale_wind_penetration,
)
from .uncertainty import ScenarioSet

DESIGN_CHOICES = ("stochastic", "det-coopt", "sequential")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _resolve_seed(args, parser) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BML_SEED")
    if env is None:
        parser.error("--seed is required (or set BML_SEED)")
    try:
        return int(env)
    except ValueError:
        parser.error(f"BML_SEED must be an integer, got {env!r}")


def _load_case(args):
    return load_system(args.case)


def _apply_overrides(net, args, parser):
    """Policy, penetration scaling, then flag overrides of file values."""
    policy = getattr(args, "policy", None)
    if policy and policy != "none":
        net = apply_reserve_offer_policy(net, policy)
    pen = getattr(args, "penetration", None)
    if pen is not None:
        if not 0.0 <= pen <= 0.7:
            parser.error(f"--penetration must lie in [0, 0.7], got {pen}")
        net = scale_wind_penetration(net, pen)
    voll = getattr(args, "voll", None)
    if voll is not None:
        if voll <= 0:
            parser.error(f"--voll must be positive, got {voll}")
        net = replace(net, voll=voll)
    x = getattr(args, "x", None)
    if x is not None:
        if not 0.0 <= x <= 1.0:
            parser.error(f"--x must lie in [0, 1], got {x}")
        net = with_x(net, x)
    return net


def _scenarios(net, args, parser) -> ScenarioSet:
    if getattr(args, "scenarios", None):
        return ScenarioSet.from_csv(args.scenarios)
    if args.n < 1:
        parser.error(f"--n must be at least 1, got {args.n}")
    return generate_scenarios(net, args.n, _resolve_seed(args, parser))


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# -- subcommands -----------------------------------------------------------------


def cmd_scenario_gen(args, parser) -> int:
    net = _load_case(args)
    if args.n < 1:
        parser.error(f"--n must be at least 1, got {args.n}")
    seed = _resolve_seed(args, parser)
    scen = generate_scenarios(net, args.n, seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    scen.to_csv(out)
    meta = out.with_suffix(".meta.json")
    _write_json(meta, {
        "case": str(args.case),
        "case_digest": net.digest(),
        "farm_ids": list(scen.farm_ids),
        "count": scen.count,
        "seed": seed,
        "wind_correlation": net.wind_correlation,
    })
    print(out)
    print(meta)
    return 0


def _da_payload(da) -> dict:
    return {
        "dispatch": da.dispatch, "wind": da.wind, "flows": da.flows,
        "angles": da.angles, "nodal_prices": da.nodal_prices,
        "energy_cost": da.energy_cost, "reserve_up": da.reserve_up,
        "reserve_down": da.reserve_down, "reserve_cost": da.reserve_cost,
    }


def _balancing_payload(bal) -> dict:
    return {
        "expected_cost": bal.expected_cost,
        "per_scenario": [
            {"cost": b.cost, "up": b.up, "down": b.down, "spill": b.spill,
             "shed": b.shed, "flows": b.flows, "prices": b.prices}
            for b in bal.per_scenario],
    }


def _pair_map(d: dict) -> dict:
    return {f"{a}->{b}": v for (a, b), v in sorted(d.items())}


def _reserve_payload(rs) -> dict:
    return {
        "up": [{"unit": u, "area": a, "mw": v}
               for (u, a), v in sorted(rs.up.items()) if v > 1e-9],
        "down": [{"unit": u, "area": a, "mw": v}
                 for (u, a), v in sorted(rs.down.items()) if v > 1e-9],
        "area_prices_up": rs.area_prices_up,
        "area_prices_down": rs.area_prices_down,
        "cost": rs.cost,
        "cross_border_up": _pair_map(rs.cross_border_up()),
        "cross_border_down": _pair_map(rs.cross_border_down()),
    }


def _requirements_payload(req) -> dict:
    return {"up": req.up, "down": req.down, "xi": req.xi}


def cmd_clear(args, parser) -> int:
    net = _apply_overrides(_load_case(args), args, parser)
    scen = _scenarios(net, args, parser)
    payload: dict = {
        "design": args.design,
        "case_digest": net.digest(),
        "scenario_seed": scen.seed,
        "scenario_count": scen.count,
    }
    if args.design == "stochastic":
        out = clear_stochastic(net, scen)
        payload.update({
            "total_cost": out.total_cost,
            "components": out.components,
            "day_ahead": _da_payload(out.da),
            "balancing": _balancing_payload(out.balancing),
            "diagnostics": out.diagnostics,
        })
    elif args.design == "det-coopt":
        req = system_requirements(net, args.xi)
        cleared = clear_det_cooptimization(net, req)
        bal = clear_balancing(net, scen, cleared.da, cleared.da.reserve_up,
                              cleared.da.reserve_down)
        payload.update({
            "total_cost": cleared.total_cost + bal.expected_cost,
            "components": {**cleared.components,
                           "expected_balancing": bal.expected_cost},
            "requirements": _requirements_payload(req),
            "day_ahead": _da_payload(cleared.da),
            "balancing": _balancing_payload(bal),
            "diagnostics": cleared.diagnostics,
        })
    else:
        areq = area_requirements(net, args.xi)
        rs = clear_reserve_market(net, areq)
        schedule = clear_energy_only_da(net, rs)
        up = {u.id: rs.up_total(u.id) for u in net.units}
        dn = {u.id: rs.down_total(u.id) for u in net.units}
        bal = clear_balancing(net, scen, schedule, up, dn)
        payload.update({
            "total_cost": rs.cost + schedule.energy_cost + bal.expected_cost,
            "components": {"da_energy": schedule.energy_cost,
                           "reserve_capacity": rs.cost,
                           "expected_balancing": bal.expected_cost},
            "requirements": {a: _requirements_payload(r)
                             for a, r in areq.items()},
            "reserve_market": _reserve_payload(rs),
            "day_ahead": _da_payload(schedule),
            "balancing": _balancing_payload(bal),
            "diagnostics": {
                "cross_border_caps": _pair_map(_cross_border_caps(net)),
            },
        })
    out_path = Path(args.out)
    _write_json(out_path, payload)
    print(out_path)
    return 0


def cmd_evaluate(args, parser) -> int:
    net = _apply_overrides(_load_case(args), args, parser)
    scen = _scenarios(net, args, parser)
    run = evaluate_design(net, scen, args.design,
                          EvaluationParams(xi=args.xi))
    out_path = Path(args.out)
    _write_json(out_path, {
        "design": run.design,
        "digest": run.digest,
        "case_digest": net.digest(),
        "scenario_seed": scen.seed,
        "scenario_count": scen.count,
        "da_energy": run.da_energy,
        "reserve_capacity": run.reserve_capacity,
        "expected_balancing": run.expected_balancing,
        "expected_total": run.expected_total,
        "status": run.status,
    })
    print(out_path)
    return 0


def _arange(start: float, stop: float, step: float) -> list[float]:
    n = int(round((stop - start) / step))
    return [start + k * step for k in range(n + 1)]


def cmd_sweep(args, parser) -> int:
    net = _load_case(args)
    seed = _resolve_seed(args, parser)
    if args.n < 1:
        parser.error(f"--n must be at least 1, got {args.n}")
    if args.workers < 1:
        parser.error(f"--workers must be at least 1, got {args.workers}")
    policy = None if args.policy == "none" else args.policy

    if args.kind == "penetration":
        if not 0 < args.step <= args.max <= 0.7:
            parser.error("need 0 < --step <= --max <= 0.7")
        grid = _arange(0.0, args.max, args.step)
        result = sweep_penetration(net, grid=grid, xi=args.xi, seed=seed,
                                   count=args.n, policy=policy,
                                   workers=args.workers)
    else:
        if not 0 < args.x_step <= 1.0:
            parser.error("need 0 < --x-step <= 1")
        if not 0 < args.cap_min <= args.cap_max or args.cap_step <= 0:
            parser.error("need 0 < --cap-min <= --cap-max and --cap-step > 0")
        xs = _arange(0.0, 1.0, args.x_step)
        caps = _arange(args.cap_min, args.cap_max, args.cap_step)
        result = sweep_x_capacity(net, xs, caps,
                                  penetration=args.penetration, xi=args.xi,
                                  seed=seed, count=args.n, policy=policy,
                                  workers=args.workers)

    write_report(result, args.out)
    print(args.out)
    failures = result.failures()
    if failures:
        _err(f"{len(failures)} of {len(result.cells)} cells failed:")
        for idx, design, status in failures:
            coords = ", ".join(
                f"{a}={result.axes[a][k]:g}"
                for a, k in zip(result.axes, idx))
            _err(f"  {design} at {coords}: {status}")
        return 1
    return 0


def cmd_export_mps(args, parser) -> int:
    net = _apply_overrides(_load_case(args), args, parser)
    scen = _scenarios(net, args, parser)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    problems = []
    if args.design == "stochastic":
        problems.append(("stochastic.mps", build_stochastic(net, scen)))
    elif args.design == "det-coopt":
        req = system_requirements(net, args.xi)
        problems.append(("det_coopt.mps",
                         build_det_cooptimization(net, req)))
        cleared = clear_det_cooptimization(net, req)
        problems.append(("balancing_w0.mps", build_balancing_scenario(
            net, scen, 0, cleared.da, cleared.da.reserve_up,
            cleared.da.reserve_down)))
    else:
        areq = area_requirements(net, args.xi)
        problems.append(("reserve_market.mps",
                         build_reserve_market(net, areq)))
        rs = clear_reserve_market(net, areq)
        problems.append(("energy_only_da.mps",
                         build_energy_only_da(net, rs)))
        schedule = clear_energy_only_da(net, rs)
        up = {u.id: rs.up_total(u.id) for u in net.units}
        dn = {u.id: rs.down_total(u.id) for u in net.units}
        problems.append(("balancing_w0.mps", build_balancing_scenario(
            net, scen, 0, schedule, up, dn)))

    for name, lp in problems:
        path = out / name
        path.write_text(export_mps(lp))
        print(path)
    return 0


# -- parser ----------------------------------------------------------------------


def _add_case(p) -> None:
    p.add_argument("--case", required=True, help="path to a case JSON file")


def _add_seed(p) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (falls back to BML_SEED)")


def _add_scenario_source(p) -> None:
    p.add_argument("--scenarios", default=None,
                   help="scenario CSV from scenario-gen; replaces sampling")
    p.add_argument("--n", type=int, default=100,
                   help="scenario count when sampling (default: 100)")
    _add_seed(p)


def _add_overrides(p) -> None:
    p.add_argument("--x", type=float, default=None,
                   help="override every tie line's balancing share")
    p.add_argument("--voll", type=float, default=None,
                   help="override the value of lost load")
    p.add_argument("--xi", type=float, default=0.99,
                   help="requirement reliability level (default: 0.99)")
    p.add_argument("--penetration", type=float, default=None,
                   help="rescale wind to this share of demand")
    p.add_argument("--policy", default="none",
                   choices=sorted(RESERVE_POLICIES) + ["none"],
                   help="reserve offer policy to apply (default: none)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmlab",
        description="Market-clearing simulation lab for reserve "
                    "procurement under wind uncertainty.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario-gen", help="sample a wind scenario set")
    _add_case(p)
    p.add_argument("--n", type=int, required=True, help="scenario count")
    _add_seed(p)
    p.add_argument("--out", default="scenarios.csv",
                   help="output CSV path (default: scenarios.csv)")
    p.set_defaults(func=cmd_scenario_gen)

    p = sub.add_parser("clear", help="clear one market design")
    _add_case(p)
    p.add_argument("--design", required=True, choices=DESIGN_CHOICES)
    _add_scenario_source(p)
    _add_overrides(p)
    p.add_argument("--out", default="outcome.json",
                   help="output JSON path (default: outcome.json)")
    p.set_defaults(func=cmd_clear)

    p = sub.add_parser("evaluate",
                       help="clear one design and settle it in-sample")
    _add_case(p)
    p.add_argument("--design", required=True, choices=DESIGN_CHOICES)
    _add_scenario_source(p)
    _add_overrides(p)
    p.add_argument("--out", default="evaluation.json",
                   help="output JSON path (default: evaluation.json)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run one of the two experiments")
    p.add_argument("kind", choices=("penetration", "x-capacity"))
    _add_case(p)
    p.add_argument("--n", type=int, default=100,
                   help="scenario count (default: 100)")
    _add_seed(p)
    p.add_argument("--xi", type=float, default=0.99)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel worker processes (default: 1)")
    p.add_argument("--out", default="report",
                   help="report directory (default: report)")
    p.add_argument("--policy", default=None,
                   choices=sorted(RESERVE_POLICIES) + ["none"],
                   help="reserve offer policy (default: baseline for "
                        "penetration, penalizing for x-capacity)")
    p.add_argument("--max", type=float, default=0.65,
                   help="largest penetration (default: 0.65)")
    p.add_argument("--step", type=float, default=0.05,
                   help="penetration grid step (default: 0.05)")
    p.add_argument("--penetration", type=float, default=0.24,
                   help="fixed penetration for x-capacity (default: 0.24)")
    p.add_argument("--x-step", dest="x_step", type=float, default=0.05,
                   help="X grid step (default: 0.05)")
    p.add_argument("--cap-min", dest="cap_min", type=float, default=50.0)
    p.add_argument("--cap-max", dest="cap_max", type=float, default=500.0)
    p.add_argument("--cap-step", dest="cap_step", type=float, default=50.0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-mps", help="write LP stages as MPS files")
    _add_case(p)
    p.add_argument("--design", required=True, choices=DESIGN_CHOICES)
    _add_scenario_source(p)
    _add_overrides(p)
    p.add_argument("--out", default="mps",
                   help="output directory (default: mps)")
    p.set_defaults(func=cmd_export_mps)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and args.policy is None:
        args.policy = ("baseline" if args.kind == "penetration"
                       else "penalizing")
    try:
        return args.func(args, parser)
    except MarketError as exc:
        _err(f"error: {exc}")
        return 1
    except SolverFailed as exc:
        _err(f"solver failure: {exc}")
        return 1
    except (ParseError, ValidationError) as exc:
        _err(f"invalid case file: {exc}")
        return 2
    except ValueError as exc:
        _err(f"invalid input: {exc}")
        return 2
    except OSError as exc:
        _err(f"io error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
