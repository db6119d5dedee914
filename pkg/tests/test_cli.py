import csv
import io
import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from cal import cli

SUMMARY_SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "summary.schema.json").read_text())

# short horizons keep the suite quick; the scenario logic is the same as with the defaults
QUICK = {
    "oscillator": {"t_end": 20.0},
    "gradient-flow-limit": {"theta": 10.0, "t_end": 3.0},
    "fourth-stab": {"theta": 4.0, "t_end": 3.0},
    "fourth-uns": {"eps_dis": 0.1, "t_end": 20.0},
    "collapse-theta": {"grids": {"theta": [10.0, 100.0]}, "t_end": 2.0},
    "collapse-eps": {"grids": {"eps_dis": [0.5, 0.1]}, "t_end": 20.0},
    "blowup-horizon": {"grids": {"eps_dis": [0.5, 0.1]}, "t_end": 20.0},
    "discrete-el": {"discrete": {"lagrangian": "free", "seed_path": "affine"}, "initial": {"q0": [0.5], "qdot0": [2.0]}},
    "gradflow-vs-el": {"discrete": {"n_nodes": 8}, "eps_grid": 0.2},
    "stability-sweep": {},
}


def cfg_for(name, **extra):
    return {"scenario": name, **QUICK[name], **extra}


def write_cfg(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.mark.parametrize("name", cli.SCENARIOS)
def test_each_scenario_runs_and_matches_schema(name, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", write_cfg(tmp_path, cfg_for(name)), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    jsonschema.validate(summary, SUMMARY_SCHEMA)
    assert summary["scenario"] == name
    assert sorted(p.name for p in out.iterdir()) == sorted(summary["files"])
    assert "plot.py" in summary["files"]


def test_oscillator_summary_error():
    summary, files = cli.execute({"scenario": "oscillator", "m": 1.0, "theta": 0.3, "t_end": 20.0,
                                  "potential": {"type": "quadratic", "stiffness": [[1.0]]},
                                  "initial": {"q0": [1.0], "qdot0": [0.0]}})
    assert summary["sup_error"] <= 1e-6
    rows = list(csv.reader(io.StringIO(files["trajectory.csv"])))
    assert rows[0] == ["t", "q_0", "qdot_0", "qddot_0", "q3_0"]
    assert len(rows) == 20001 + 1


def test_collapse_theta_distances_decrease():
    summary, _ = cli.execute(cfg_for("collapse-theta"))
    d = [r["sup_distance"] for r in summary["rows"]]
    assert d[0] > d[1]


def test_fourth_uns_records_divergence():
    summary, _ = cli.execute(cfg_for("fourth-uns"))
    assert summary["diverged"]
    assert summary["blowup_time"] < 20.0
    assert summary["stability"]["verdict"] == "unstable"


def test_discrete_el_free_affine_residual_is_zero():
    # dyadic grid and data make every slope exact, so the residual is exactly zero
    _, files = cli.execute(cfg_for("discrete-el", eps_grid=0.25))
    rows = list(csv.reader(io.StringIO(files["residual.csv"])))
    assert rows[0] == ["t", "r_0"]
    assert all(float(r[1]) == 0.0 for r in rows[1:])
    # otherwise only rounding remains
    summary, _ = cli.execute(cfg_for("discrete-el", eps_grid=0.1))
    assert summary["extra"]["max_el_residual"] <= 1e-12


def test_reproducible_bytes(tmp_path):
    for name in ("gradflow-vs-el", "fourth-stab", "discrete-el"):
        cfg = cfg_for(name)
        if name == "discrete-el":
            cfg = {"scenario": name, "discrete": {"seed_path": "random"}, "seed": 7}
        a, b = tmp_path / f"{name}-a", tmp_path / f"{name}-b"
        path = write_cfg(tmp_path, cfg, f"{name}.json")
        assert cli.main(["run", path, "--out", str(a)]) == 0
        assert cli.main(["run", path, "--out", str(b)]) == 0
        for f in sorted(a.iterdir()):
            assert f.read_bytes() == (b / f.name).read_bytes()


def test_seed_changes_random_path():
    a, _ = cli.execute({"scenario": "discrete-el", "discrete": {"seed_path": "random"}, "seed": 1})
    b, _ = cli.execute({"scenario": "discrete-el", "discrete": {"seed_path": "random"}, "seed": 2})
    assert a["extra"]["action"] != b["extra"]["action"]


def test_csv_full_precision():
    _, files = cli.execute(cfg_for("oscillator", t_end=1.0))
    row = list(csv.reader(io.StringIO(files["trajectory.csv"])))[5]
    assert float(row[1]) == float(f"{float(row[1]):.17g}")
    assert any(len(x.replace("-", "").replace(".", "").split("e")[0]) >= 15 for x in row[1:])


def test_exit_code_config_errors(tmp_path, capsys):
    assert cli.main(["run", write_cfg(tmp_path, {"scenario": "nope"}), "--out", str(tmp_path)]) == 2
    assert cli.main(["run", write_cfg(tmp_path, {"scenario": "oscillator", "m": -1}), "--out", str(tmp_path)]) == 2
    bad_dim = {"scenario": "oscillator", "initial": {"q0": [1.0, 2.0]}}
    assert cli.main(["validate", write_cfg(tmp_path, bad_dim)]) == 2
    (tmp_path / "broken.json").write_text("{not json")
    assert cli.main(["validate", str(tmp_path / "broken.json")]) == 2
    assert "config error" in capsys.readouterr().err


def test_exit_code_unexpected_divergence(tmp_path):
    cfg = {"scenario": "fourth-stab", "theta": 1.0, "t_end": 200.0,
           "integrator": {"method": "RK4Fixed", "step": 1e-2, "blowup_norm": 1e3}}
    out = tmp_path / "out"
    assert cli.main(["run", write_cfg(tmp_path, cfg), "--out", str(out)]) == 3
    assert json.loads((out / "summary.json").read_text())["diverged"]


def test_exit_code_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = write_cfg(tmp_path, cfg_for("stability-sweep"))
    assert cli.main(["run", cfg, "--out", str(blocker / "sub")]) == 4
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 4


def test_validate_command(tmp_path, capsys):
    assert cli.main(["validate", write_cfg(tmp_path, cfg_for("collapse-theta"))]) == 0
    assert "ok" in capsys.readouterr().out


def test_sweep_rows_ordered_and_thread_independent(tmp_path, monkeypatch):
    cfg = {"scenario": "fourth-uns", "t_end": 20.0, "grids": {"eps_dis": [0.5, 0.1], "rho": [1.0, 2.0]}}
    path = write_cfg(tmp_path, cfg)
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("CAL_THREADS", threads)
        out = tmp_path / f"sweep{threads}"
        assert cli.main(["sweep", path, "--out", str(out)]) == 0
        outs.append(out)
    assert (outs[0] / "sweep.csv").read_bytes() == (outs[1] / "sweep.csv").read_bytes()
    assert (outs[0] / "sweep.json").read_bytes() == (outs[1] / "sweep.json").read_bytes()
    rows = json.loads((outs[0] / "sweep.json").read_text())["rows"]
    assert [(r["eps_dis"], r["rho"]) for r in rows] == [(0.5, 1.0), (0.5, 2.0), (0.1, 1.0), (0.1, 2.0)]
    assert all(r["verdict"] == "unstable" and r["diverged"] for r in rows)


def test_sweep_case_ii_rows_unstable_and_collapsed_stable():
    summary, _ = cli.execute({"scenario": "stability-sweep", "grids": {"eps_dis": [0.5, 0.1, 0.02]}})
    rows = summary["rows"]
    case_ii = [r for r in rows if r["law"] == "CaseIISpec"]
    assert len(case_ii) == 3 and all(r["verdict"] == "unstable" for r in case_ii)
    assert [r["verdict"] for r in rows if r["law"] == "CollapsedEps"] == ["stable"]


def test_blowup_time_decreases_with_eps():
    summary, _ = cli.execute({"scenario": "blowup-horizon", "grids": {"eps_dis": [0.5, 0.1, 0.02]}, "t_end": 20.0})
    times = [r["blowup_time"] for r in summary["rows"]]
    assert times[0] > times[1] > times[2]


def test_sweep_requires_grid(tmp_path):
    assert cli.main(["sweep", write_cfg(tmp_path, {"scenario": "oscillator"}), "--out", str(tmp_path / "o")]) == 2


def test_plot_script_references_csvs():
    _, files = cli.execute(cfg_for("gradflow-vs-el"))
    assert "path.csv" in files["plot.py"]
    compile(files["plot.py"], "plot.py", "exec")


def test_non_finite_values_serialize_as_null():
    assert cli._finite({"a": [np.inf, 1.0, np.nan]}) == {"a": [None, 1.0, None]}


def test_sweep_takes_verdicts_from_rows(tmp_path):
    cfg = {"scenario": "blowup-horizon", "t_end": 20.0, "grids": {"eps_dis": [0.5, 0.1]}}
    out = tmp_path / "sweep"
    assert cli.main(["sweep", write_cfg(tmp_path, cfg), "--out", str(out)]) == 0
    rows = json.loads((out / "sweep.json").read_text())["rows"]
    assert [r["verdict"] for r in rows] == ["unstable", "unstable"]
    assert rows[0]["blowup_time"] > rows[1]["blowup_time"]
