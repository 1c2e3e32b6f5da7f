import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from keensim import cli
from keensim.integrate import envelope_decay_rate
from keensim.report import read_trajectory_csv


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0 and "fig_limit_cycle_sweep" in out
    code, out, _ = run(capsys, "--list", "--format", "json")
    assert code == 0 and any(e["name"] == "keen2013_basic" for e in json.loads(out))


def test_equilibria_table(capsys):
    code, out, _ = run(capsys, "equilibria", "@keen2013_basic")
    assert code == 0 and "(0.8361, 0.9686, 0.0702)" in out


def test_inflation_table_has_deflation_rows(capsys):
    code, out, _ = run(capsys, "equilibria", "@keen2013_inflation")
    assert code == 0
    assert out.count("0.7656") == 1 and "Deflat3_FiniteDebt  absent" in out


def test_speculation_stability_json(capsys):
    code, out, _ = run(capsys, "stability", "@keen2013_speculation", "--format", "json")
    doc = json.loads(out)
    verdicts = {e["label"]: e.get("verdict") for e in doc["equilibria"]}
    assert len(verdicts) == 8
    assert verdicts["Deflat3_InfDebt_InfSpec[+]"] == "stable"
    assert verdicts["Bad_InfDebt_FiniteSpec"] == "unstable"


def test_absent_equilibrium_is_not_an_error(capsys):
    code, out, _ = run(capsys, "stability", "@fig_effect_xi_on_existence")
    assert code == 0 and "negative discriminant" in out


def test_simulate_writes_manifest(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "@keen2013_inflation_r002", "--out", str(tmp_path),
                       "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["classification"]["name"] == "ConvergedTo(Good1[+])"
    for f in doc["files"]:
        assert Path(f).is_file()
    assert any(f.endswith("phase_lambda_b.svg") for f in doc["files"])
    with open(tmp_path / "keen2013_inflation_r002" / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 8002 and rows[0][-1] == "p"


def test_env_var_sets_output(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("KEENSIM_OUT", str(tmp_path))
    code, _, _ = run(capsys, "simulate", "@keen2013_basic", "--t-end", "5")
    assert code == 0 and (tmp_path / "keen2013_basic" / "trajectory.csv").is_file()


def test_plots_flag(tmp_path, capsys):
    run(capsys, "simulate", "@keen2013_basic", "--t-end", "5", "--out", str(tmp_path))
    assert not (tmp_path / "keen2013_basic" / "plots").exists()
    run(capsys, "simulate", "@keen2013_basic", "--t-end", "5", "--out", str(tmp_path), "--plots")
    assert (tmp_path / "keen2013_basic" / "plots" / "series_omega.svg").is_file()


def test_stall_is_reported_not_fatal(tmp_path, capsys):
    text = (Path(cli.__file__).parent / "scenarios" / "keen2013_basic.json").read_text()
    doc = json.loads(text)
    doc["integrator"] = {"max_steps": 5, "t_end": 50}
    path = tmp_path / "stall.json"
    path.write_text(json.dumps(doc))
    code, out, err = run(capsys, "simulate", str(path), "--out", str(tmp_path))
    assert code == 0 and "stalled" in err and "Undetermined" in out


def test_sweep_summary_and_cells(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "@gamma_sweep", "--out", str(tmp_path), "--workers", "2")
    assert code == 0
    base = tmp_path / "gamma_sweep"
    with open(base / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["price.gamma"]) for r in rows] == [0.5, 0.8, 0.95]
    assert all(r["regime"] == "ConvergedTo(Good1[+])" for r in rows)
    # damping measured independently on the emitted CSVs
    rates = []
    for cell in sorted(base.glob("cell_*")):
        cols = read_trajectory_csv((cell / "trajectory.csv").read_text())
        rates.append(envelope_decay_rate(cols["t"], cols["lambda"]))
    assert rates[0] > rates[1] > rates[2] > 0
    assert np.allclose(rates, [float(r["lambda_decay_rate"]) for r in rows])


def test_sweep_parallel_matches_serial(tmp_path, capsys):
    run(capsys, "sweep", "@xi_sweep", "--out", str(tmp_path / "a"), "--workers", "1", "--t-end", "50")
    run(capsys, "sweep", "@xi_sweep", "--out", str(tmp_path / "b"), "--workers", "3", "--t-end", "50")
    for cell in sorted((tmp_path / "a" / "xi_sweep").glob("cell_*")):
        other = tmp_path / "b" / "xi_sweep" / cell.name / "trajectory.csv"
        assert (cell / "trajectory.csv").read_bytes() == other.read_bytes()


def test_simulate_on_sweep_scenario_runs_cells(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "@xi_sweep", "--out", str(tmp_path), "--t-end", "20", "--workers", "1")
    assert code == 0 and (tmp_path / "xi_sweep" / "summary.csv").is_file()


def test_sweep_without_block_is_usage_error(capsys):
    code, _, err = run(capsys, "sweep", "@keen2013_basic")
    assert code == 1 and "no sweep block" in err


def test_schema_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"name": "x"}')
    code, _, err = run(capsys, "equilibria", str(path))
    assert code == 1 and "scenario error" in err


def test_missing_file_exit_code(capsys):
    code, _, err = run(capsys, "equilibria", "/nonexistent/scenario.json")
    assert code == 2 and "I/O error" in err


def test_unwritable_output_exit_code(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, _ = run(capsys, "simulate", "@keen2013_basic", "--t-end", "2", "--out", str(blocker))
    assert code == 2


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 1
    assert cli.main([]) == 1
    assert cli.main(["simulate", "@keen2013_basic", "--tol", "-1"]) == 1


def test_seed_registry(tmp_path, capsys):
    code, _, err = run(capsys, "--seed-registry", "fig_convergent", "--out", str(tmp_path))
    assert code == 0 and "seeded" in err
    assert json.loads((tmp_path / "fig_convergent.json").read_text())["name"] == "fig_convergent"
    code, _, _ = run(capsys, "--seed-registry", "nope", "--out", str(tmp_path))
    assert code == 1


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "keensim.cli", "equilibria", "@keen2013_basic", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.load(io.StringIO(proc.stdout))["equilibria"][0]["label"] == "Good1"
