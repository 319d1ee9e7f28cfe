"""End-to-end checks of the command-line interface.

main() runs in-process so return codes, stdout, and written files can be
asserted directly.  argparse and parser.error paths surface as
SystemExit(2); runtime failures come back as plain return values.
"""

import json

import pytest

from bmlab.cli import main
from bmlab.system import load_system
from bmlab.uncertainty import ScenarioSet

from conftest import CASES

MICRO = str(CASES / "micro.json")
TWO_ZONE = str(CASES / "two_zone.json")


def run(argv, capsys):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def write_two_farm_micro(path):
    """Micro case with a second farm in area a2, one farm per area."""
    case = json.loads((CASES / "micro.json").read_text())
    case["name"] = "micro2f"
    case["wind_farms"].append({"id": "w2", "bus": "n2", "capacity": 25.0,
                               "alpha": 5.67, "beta": 6.48})
    path.write_text(json.dumps(case))
    return str(path)


# -- scenario-gen ------------------------------------------------------------------


def test_scenario_gen_writes_csv_and_meta(tmp_path, capsys):
    out = tmp_path / "scen.csv"
    rc, stdout, _ = run(["scenario-gen", "--case", MICRO, "--n", "5",
                         "--seed", "11", "--out", str(out)], capsys)
    assert rc == 0
    meta_path = tmp_path / "scen.meta.json"
    assert stdout.splitlines() == [str(out), str(meta_path)]

    scen = ScenarioSet.from_csv(out)
    assert scen.count == 5 and scen.seed == 11
    assert list(scen.farm_ids) == ["w1"]

    meta = json.loads(meta_path.read_text())
    net = load_system(MICRO)
    assert meta["case_digest"] == net.digest()
    assert meta["farm_ids"] == ["w1"]
    assert meta["count"] == 5 and meta["seed"] == 11
    assert meta["wind_correlation"] == net.wind_correlation


def test_scenario_gen_is_deterministic(tmp_path, capsys):
    args = ["scenario-gen", "--case", MICRO, "--n", "8", "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.meta.json").read_bytes() == \
        (tmp_path / "b.meta.json").read_bytes()


def test_scenario_gen_rejects_nonpositive_count(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["scenario-gen", "--case", MICRO, "--n", "0", "--seed", "1",
              "--out", str(tmp_path / "s.csv")])
    assert exc.value.code == 2


# -- seeds -------------------------------------------------------------------------


def test_seed_env_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BML_SEED", "9")
    out = tmp_path / "s.csv"
    rc, _, _ = run(["scenario-gen", "--case", MICRO, "--n", "2",
                    "--out", str(out)], capsys)
    assert rc == 0
    assert out.read_text().splitlines()[0] == "# seed=9"
    assert json.loads((tmp_path / "s.meta.json").read_text())["seed"] == 9


def test_explicit_seed_beats_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BML_SEED", "9")
    out = tmp_path / "s.csv"
    rc, _, _ = run(["scenario-gen", "--case", MICRO, "--n", "2",
                    "--seed", "4", "--out", str(out)], capsys)
    assert rc == 0
    assert out.read_text().splitlines()[0] == "# seed=4"


def test_missing_seed_is_usage_error(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("BML_SEED", raising=False)
    with pytest.raises(SystemExit) as exc:
        main(["scenario-gen", "--case", MICRO, "--n", "2",
              "--out", str(tmp_path / "s.csv")])
    assert exc.value.code == 2
    assert "BML_SEED" in capsys.readouterr().err


def test_invalid_env_seed_is_usage_error(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BML_SEED", "not-a-number")
    with pytest.raises(SystemExit) as exc:
        main(["scenario-gen", "--case", MICRO, "--n", "2",
              "--out", str(tmp_path / "s.csv")])
    assert exc.value.code == 2


# -- clear and evaluate ------------------------------------------------------------


@pytest.mark.parametrize("design", ["stochastic", "det-coopt", "sequential"])
def test_clear_totals_match_evaluation(design, tmp_path, capsys):
    common = ["--case", MICRO, "--design", design, "--n", "4", "--seed", "2"]
    cleared = tmp_path / "outcome.json"
    rc, stdout, _ = run(["clear"] + common + ["--out", str(cleared)], capsys)
    assert rc == 0
    assert stdout == f"{cleared}\n"  # stdout carries the path, nothing else

    evaluated = tmp_path / "eval.json"
    assert run(["evaluate"] + common + ["--out", str(evaluated)], capsys)[0] == 0

    outcome = json.loads(cleared.read_text())
    ev = json.loads(evaluated.read_text())
    assert ev["status"] == "ok"
    assert "wall_clock_ms" not in ev
    assert outcome["total_cost"] == ev["expected_total"]
    assert outcome["scenario_seed"] == ev["scenario_seed"] == 2
    assert outcome["case_digest"] == ev["case_digest"]
    closure = sum(outcome["components"].values())
    assert abs(closure - outcome["total_cost"]) <= 1e-6 * max(
        1.0, abs(outcome["total_cost"]))


def test_clear_sequential_reports_cross_border_caps(tmp_path, capsys):
    out = tmp_path / "o.json"
    rc, _, _ = run(["clear", "--case", MICRO, "--design", "sequential",
                    "--n", "3", "--seed", "1", "--x", "0.15",
                    "--out", str(out)], capsys)
    assert rc == 0
    payload = json.loads(out.read_text())
    # 0.15 of the 200 MW tie, both directions
    assert payload["diagnostics"]["cross_border_caps"] == {
        "a1->a2": 30.0, "a2->a1": 30.0}
    assert set(payload["reserve_market"]) >= {
        "up", "down", "area_prices_up", "area_prices_down", "cost"}


def test_clear_accepts_scenario_csv(tmp_path, capsys):
    scen = tmp_path / "scen.csv"
    assert run(["scenario-gen", "--case", MICRO, "--n", "4", "--seed", "2",
                "--out", str(scen)], capsys)[0] == 0
    sampled = tmp_path / "sampled.json"
    from_file = tmp_path / "from_file.json"
    base = ["clear", "--case", MICRO, "--design", "stochastic"]
    assert run(base + ["--n", "4", "--seed", "2", "--out", str(sampled)],
               capsys)[0] == 0
    assert run(base + ["--scenarios", str(scen), "--out", str(from_file)],
               capsys)[0] == 0
    # repr() round-trips floats, so the CSV path reproduces sampling exactly
    assert sampled.read_bytes() == from_file.read_bytes()


def test_unknown_design_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["clear", "--case", MICRO, "--design", "nodal",
              "--n", "2", "--seed", "1"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["clear", "--case", MICRO, "--design", "stochastic", "--n", "2",
     "--seed", "1", "--x", "1.5"],
    ["clear", "--case", MICRO, "--design", "stochastic", "--n", "2",
     "--seed", "1", "--penetration", "0.9"],
    ["clear", "--case", MICRO, "--design", "stochastic", "--n", "2",
     "--seed", "1", "--voll=-1"],
    ["sweep", "penetration", "--case", MICRO, "--seed", "1", "--step", "0"],
    ["sweep", "x-capacity", "--case", MICRO, "--seed", "1", "--x-step", "0"],
])
def test_flag_validation_is_usage_error(argv, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_infeasible_clear_exits_one_with_stage_label(tmp_path, capsys):
    out = tmp_path / "o.json"
    rc, stdout, stderr = run(
        ["clear", "--case", TWO_ZONE, "--design", "sequential",
         "--penetration", "0.65", "--n", "5", "--seed", "1",
         "--out", str(out)], capsys)
    assert rc == 1
    assert stdout == ""
    assert "reserve capacity market" in stderr
    assert not out.exists()


def test_broken_case_file_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", ')
    rc, _, stderr = run(["clear", "--case", str(bad), "--design",
                         "stochastic", "--n", "2", "--seed", "1",
                         "--out", str(tmp_path / "o.json")], capsys)
    assert rc == 2
    assert "invalid case file" in stderr


# -- export-mps --------------------------------------------------------------------


def test_export_mps_stochastic_single_stage(tmp_path, capsys):
    out = tmp_path / "mps"
    rc, stdout, _ = run(["export-mps", "--case", MICRO, "--design",
                         "stochastic", "--n", "2", "--seed", "1",
                         "--out", str(out)], capsys)
    assert rc == 0
    assert stdout.splitlines() == [str(out / "stochastic.mps")]
    text = (out / "stochastic.mps").read_text()
    assert text.startswith("NAME")
    # per-scenario recourse shows up as scenario-tagged names
    assert "_w0" in text and "_w1" in text
    assert text.rstrip().endswith("ENDATA")


def test_export_mps_sequential_three_stages(tmp_path, capsys):
    out = tmp_path / "mps"
    rc, stdout, _ = run(["export-mps", "--case", MICRO, "--design",
                         "sequential", "--n", "2", "--seed", "1",
                         "--out", str(out)], capsys)
    assert rc == 0
    names = ["reserve_market.mps", "energy_only_da.mps", "balancing_w0.mps"]
    assert stdout.splitlines() == [str(out / n) for n in names]
    for name in names:
        text = (out / name).read_text()
        assert text.startswith("NAME") and text.rstrip().endswith("ENDATA")


def test_export_mps_to_unwritable_path_exits_one(tmp_path, capsys):
    blocker = tmp_path / "plain"
    blocker.write_text("")
    rc, _, stderr = run(["export-mps", "--case", MICRO, "--design",
                         "stochastic", "--n", "2", "--seed", "1",
                         "--out", str(blocker / "sub")], capsys)
    assert rc == 1
    assert "io error" in stderr


# -- sweep -------------------------------------------------------------------------


def test_sweep_penetration_report_and_worker_determinism(tmp_path, capsys):
    base = ["sweep", "penetration", "--case", TWO_ZONE, "--seed", "7",
            "--n", "6", "--max", "0.05", "--step", "0.05"]
    rep1, rep2 = tmp_path / "rep1", tmp_path / "rep2"
    rc, stdout, stderr = run(base + ["--out", str(rep1)], capsys)
    assert rc == 0
    assert stdout == f"{rep1}\n"
    assert stderr == ""
    meta = json.loads((rep1 / "meta.json").read_text())
    assert meta["scenario_seed"] == 7
    assert meta["reserve_policy"] == "baseline"
    assert meta["axes"]["penetration"] == [0.0, 0.05]
    assert meta["failures"] == []

    rc, _, _ = run(base + ["--out", str(rep2), "--workers", "2"], capsys)
    assert rc == 0
    for name in ("costs.csv", "locus.csv", "meta.json"):
        assert (rep1 / name).read_bytes() == (rep2 / name).read_bytes()


def test_sweep_failure_lists_cells_and_exits_one(tmp_path, capsys):
    case = write_two_farm_micro(tmp_path / "micro2f.json")
    rep = tmp_path / "rep"
    rc, stdout, stderr = run(
        ["sweep", "x-capacity", "--case", case, "--seed", "3", "--n", "6",
         "--x-step", "0.5", "--cap-min", "50", "--cap-max", "50",
         "--cap-step", "50", "--out", str(rep)], capsys)
    assert rc == 1
    assert stdout == f"{rep}\n"
    assert "1 of 3 cells failed" in stderr
    assert "x=1" in stderr and "energy-only" in stderr

    rows = (rep / "costs.csv").read_text().splitlines()
    assert rows[0] == ("design,x,capacity,da_energy,reserve_capacity,"
                      "expected_balancing,expected_total,status")
    assert rows[3].startswith("sequential,1,50,inf,inf,inf,inf,infeasible:")
    # the walled-off column is skipped, the open ones keep the cheap X
    assert (rep / "locus.csv").read_text() == "capacity,x\n50,0\n"
