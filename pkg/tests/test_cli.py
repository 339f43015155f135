import csv
import json
from pathlib import Path

import numpy as np
import pytest

from flowkick.cli import RunConfig, main

SYSTEMS = Path(__file__).resolve().parent.parent / "demos" / "systems"


def run(tmp_path, *args, out="out"):
    target = tmp_path / out
    code = main(list(args) + ["--out", str(target)])
    return code, target


def load_json(path):
    return json.loads(path.read_text())


def csv_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_simulate_logistic_marked_point(tmp_path):
    code, out = run(tmp_path, "simulate", "--model", "logistic", "--tau", "0.4", "--kappa",
                    "-0.096", "--x0", "0.2", "--x0", "0.5", "--x0", "0.8", "--cycles", "400",
                    "--format", "csv,json,svg")
    assert code == 0
    orbits = load_json(out / "simulate.json")["data"]["orbits"]
    exited = [o["exited"] for o in orbits]
    assert exited == [True, False, False]
    for o in orbits[1:]:
        assert o["final_state"][0] == pytest.approx(0.5475, abs=1e-3)
    rows = csv_rows(out / "simulate.csv")
    assert {r["phase"] for r in rows} == {"flow", "kick"}
    assert set(rows[0]) == {"orbit", "cycle", "t", "x_1", "phase"}
    assert (out / "simulate.svg").read_text().startswith("<?xml")


def test_simulate_all_exit_without_fixed_points(tmp_path):
    code, out = run(tmp_path, "simulate", "--model", "logistic", "--tau", "2.5", "--kappa",
                    "-0.6", "--x0", "0.3", "--x0", "0.8", "--x0", "1.4", "--cycles", "50")
    assert code == 0
    assert all(o["exited"] for o in load_json(out / "simulate.json")["data"]["orbits"])


def test_simulate_zero_kick_converges_to_one(tmp_path):
    code, out = run(tmp_path, "simulate", "--model", "logistic", "--tau", "1", "--lambda", "0",
                    "--x0", "0.1", "--cycles", "40")
    assert code == 0
    final = load_json(out / "simulate.json")["data"]["orbits"][0]["final_state"]
    assert final[0] == pytest.approx(1.0, abs=1e-9)


def test_equilibria_examples(tmp_path):
    code, out = run(tmp_path, "equilibria", "--model", "logistic", "--tau", "0", "--lambda",
                    "-0.24", out="a")
    pts = load_json(out / "equilibria.json")["data"]["fixed_points"]
    assert code == 0
    assert sorted(round(p["x"][0], 8) for p in pts) == [0.4, 0.6]
    code, out = run(tmp_path, "equilibria", "--model", "klausmeier", "--tau", "1", "--lambda",
                    "2", "--x0", "0,2", out="b")
    xs = [p["x"] for p in load_json(out / "equilibria.json")["data"]["fixed_points"]]
    assert any(np.allclose(x, [0.0, 2.0 / (1 - np.exp(-1.0))], atol=1e-8) for x in xs)
    code, out = run(tmp_path, "equilibria", "--model", "logistic", "--tau", "2.5", "--kappa",
                    "-0.6", out="c")
    assert code == 0
    assert load_json(out / "equilibria.json")["data"]["fixed_points"] == []


def test_branch_outputs(tmp_path):
    code, out = run(tmp_path, "branch", "--model", "logistic", "--tau", "0", "--lambda", "-0.24",
                    "--free", "tau", "--window", "0:3", "--x0", "0.6", "--format", "csv,json,svg")
    assert code == 0
    data = load_json(out / "branch.json")["data"]
    sn = [e for e in data["events"] if e["type"] == "SN"]
    assert len(sn) == 1 and sn[0]["tau"] == pytest.approx(1.42012, abs=1e-4)
    rows = csv_rows(out / "branch.csv")
    assert "arclength" in rows[0] and "stability" in rows[0]
    svg = (out / "branch.svg").read_text()
    assert "stroke-dasharray" in svg


def test_branch_empty_window_is_usage_error(tmp_path):
    code, _ = run(tmp_path, "branch", "--model", "logistic", "--tau", "0", "--lambda", "-0.24",
                  "--free", "tau", "--window", "1:1")
    assert code == 2


def test_branch_without_fixed_point_is_numeric_failure(tmp_path):
    code, _ = run(tmp_path, "branch", "--model", "logistic", "--tau", "2.5", "--kappa", "-0.6",
                  "--free", "tau", "--window", "0:3", "--x0", "0.5")
    assert code == 3


def test_bifcurve_logistic_sn(tmp_path):
    code, out = run(tmp_path, "bifcurve", "--model", "logistic", "--kind", "sn",
                    "--tau-window", "0:3", "--tau", "0", "--lambda", "-0.24", "--x0", "0.6",
                    "--window=-0.3:0", "--mark", "0.4:-0.24", "--mark", "2.5:-0.24",
                    "--format", "csv,json,svg")
    assert code == 0
    rows = csv_rows(out / "bifcurve.csv")
    taus = np.array([float(r["tau"]) for r in rows])
    lams = np.array([float(r["lambda"]) for r in rows])
    assert {r["type"] for r in rows} == {"SN"}
    assert lams[np.argmin(taus)] == pytest.approx(-0.25, abs=1e-9)
    np.testing.assert_allclose(lams, np.where(taus == 0, -0.25, -np.tanh(taus / 4) /
                                              np.where(taus == 0, 1, taus)), atol=1e-8)


def test_bifcurve_predator_prey_overlay(tmp_path):
    code, out = run(tmp_path, "bifcurve", "--model", "predator-prey", "--kind", "ns,tc",
                    "--tau-window", "0:1", "--points", "5", "--tau", "0", "--lambda", "0.05",
                    "--x0", "1.5,1", "--window", "0:0.5")
    assert code == 0
    rows = csv_rows(out / "bifcurve.csv")
    kinds = {r["type"] for r in rows}
    assert {"TC", "NS"} <= kinds
    tc = [(float(r["tau"]), float(r["lambda"])) for r in rows if r["type"] == "TC"]
    a = 0.5 - np.exp(-2.0)
    for tau, lam in tc:
        expected = a if tau == 0 else -np.expm1(-a * tau) / tau
        assert lam == pytest.approx(expected, abs=1e-9)


def test_grid_kappa_mode(tmp_path):
    code, out = run(tmp_path, "grid", "--model", "logistic", "--tau-axis", "0.4:2.5:2",
                    "--kappa-axis=-0.6:0:3", "--box", "0:1.5", "--threads", "2")
    assert code == 0
    cells = load_json(out / "grid.json")["data"]["cells"]
    by = {(c["tau"], c["second"]): c for c in cells}
    assert by[(2.5, -0.6)]["count"] == 0
    assert sorted(x[0] for x in by[(0.4, 0.0)]["states"]) == pytest.approx([0.0, 1.0], abs=1e-9)
    assert "incomplete" in load_json(out / "grid.json")["data"]["meta"]["warning"]


def test_grid_deterministic_across_threads_and_dirs(tmp_path):
    args = ["grid", "--model", "logistic", "--tau-axis", "0.5:2:3", "--lambda-axis=-0.3:-0.1:3",
            "--seed", "5", "--format", "csv,json,svg"]
    assert main(args + ["--threads", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--threads", "3", "--out", str(tmp_path / "b")]) == 0
    for name in ("grid.csv", "grid.json", "grid.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_headers_embed_version_and_hash(tmp_path):
    code, out = run(tmp_path, "equilibria", "--model", "logistic", "--tau", "0.4", "--lambda",
                    "-0.24", "--format", "csv,json")
    head = (out / "equilibria.csv").read_text().splitlines()[:3]
    doc = load_json(out / "equilibria.json")
    assert head[0] == "# flowkick 0.1.0"
    digest = head[1].split(": ")[1]
    assert doc["run_config_sha256"] == digest
    assert doc["schema_version"] == 1
    cfg = RunConfig(**{**doc["run_config"], "out": "elsewhere"})
    assert cfg.digest() == digest


def test_system_file_matches_builtin(tmp_path):
    args = ["equilibria", "--tau", "0.4", "--lambda", "-0.24", "--box", "0:1.5"]
    main(args + ["--model", "logistic", "--out", str(tmp_path / "m")])
    main(args + ["--system", str(SYSTEMS / "logistic.sys"), "--out", str(tmp_path / "s")])
    xm = [p["x"] for p in load_json(tmp_path / "m" / "equilibria.json")["data"]["fixed_points"]]
    xs = [p["x"] for p in load_json(tmp_path / "s" / "equilibria.json")["data"]["fixed_points"]]
    np.testing.assert_allclose(xm, xs, atol=1e-10)
    doc = load_json(tmp_path / "s" / "equilibria.json")
    assert len(doc["run_config"]["system_sha256"]) == 64


def test_bad_system_file_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.sys"
    bad.write_text("[states]\nx\n[flow]\nx' = x*(1-\n[kickrate]\nr_x = lambda\n")
    code, _ = run(tmp_path, "equilibria", "--system", str(bad), "--tau", "0", "--lambda", "1")
    assert code == 2
    assert "line 4, column 11" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["equilibria", "--model", "logistic", "--lambda", "1", "--kappa", "1"],
    ["equilibria", "--model", "logistic", "--system", "x.sys"],
    ["frobnicate"],
])
def test_argparse_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_usage_errors_return_two(tmp_path):
    assert run(tmp_path, "equilibria", "--model", "nope", "--tau", "0", "--lambda", "0")[0] == 2
    assert run(tmp_path, "equilibria", "--model", "logistic", "--tau", "0", "--lambda", "0",
               "--format", "pdf")[0] == 2
    assert run(tmp_path, "equilibria", "--model", "logistic", "--tau", "0", "--kappa", "1")[0] == 2


def test_models_listing(capsys):
    assert main(["models"]) == 0
    listing = capsys.readouterr().out
    for name in ("logistic", "klausmeier", "predator-prey", "logistic-proportional"):
        assert name in listing
    assert main(["models", "show", "predator-prey"]) == 0
    assert "lambda_hopf" in capsys.readouterr().out
