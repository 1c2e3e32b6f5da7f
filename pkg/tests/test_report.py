import json
import math
import re
from pathlib import Path

import numpy as np

from keensim import report, svg
from keensim.equilibria import enumerate_equilibria
from keensim.integrate import IntegratorConfig, RegimeClassification, simulate
from keensim.params import basic_params, inflation_params, speculation_params
from keensim.stability import classify

HEADER = "t,omega,lambda,b,f,q,v,x,pi,i,g,g_nominal,c_share,p"


def test_number_formats():
    assert report.fmt4(0.8360528) == "0.8361"
    assert report.fmt4(math.inf) == "inf" and report.fmt4(-math.inf) == "-inf"
    assert report.fmt4(None) == "-"
    assert report.fmt17(0.1) == "0.10000000000000001"


def test_json_safe():
    doc = report.json_safe({"a": (math.inf, -math.inf, math.nan), "b": np.float64(2.5), "c": np.int8(3)})
    assert doc == {"a": ["inf", "-inf", None], "b": 2.5, "c": 3}
    json.loads(report.dumps({"x": math.inf}))


def test_equilibrium_table_contents():
    p = basic_params()
    recs = [report.equilibrium_record(pt, classify(pt, p)) for pt in enumerate_equilibria(p, "Basic3")]
    text = report.equilibrium_table(recs)
    assert "(0.8361, 0.9686, 0.0702)" in text and "stable" in text
    assert "(0.0000, 0.0000, inf)" in text
    assert "basic_good_interval" in text  # the erratum note is listed


def test_absent_rows_carry_the_reason():
    p = inflation_params()
    recs = [report.equilibrium_record(pt) for pt in enumerate_equilibria(p, "Inflation3")]
    text = report.equilibrium_table(recs)
    assert "absent" in text and "no finite debt root" in text


def test_verdict_fixture_is_canonical():
    recs = [{"label": "b", "exists": True, "verdict": "stable"}, {"label": "a", "exists": True, "verdict": "unstable"},
            {"label": "c", "exists": False}]
    assert report.verdict_fixture(recs) == '{\n  "a": "unstable",\n  "b": "stable"\n}\n'


def test_csv_schema_with_price_and_chart_switch():
    p = inflation_params()
    traj = simulate("Inflation3", (0.9, 0.9, 0.3), p, IntegratorConfig(t_end=150))
    text = report.trajectory_csv(traj, p)
    lines = text.splitlines()
    assert lines[0] == HEADER
    assert len(lines) == traj.times.size + 1
    first = lines[1].split(",")
    assert first[:4] == ["0", "0.90000000000000002", "0.90000000000000002", "0.29999999999999999"]
    assert first[4:8] == ["", "", "", ""]
    last = lines[-1].split(",")
    assert last[3] == "" and last[5] != ""  # debt carried as q once in the inverse chart
    cols = report.read_trajectory_csv(text)
    assert np.allclose(cols["omega"], traj.states[:, 0], rtol=0, atol=0)


def test_csv_without_price_block():
    p = basic_params()
    traj = simulate("Basic3", (0.9, 0.9, 0.3), p, IntegratorConfig(t_end=2))
    assert report.trajectory_csv(traj, p).splitlines()[0] == HEADER[:-2]


def test_csv_is_deterministic():
    p = speculation_params()
    cfg = IntegratorConfig(t_end=20)
    a = report.trajectory_csv(simulate("Speculation4", (0.83, 0.967, 0.34, 0.004), p, cfg), p)
    b = report.trajectory_csv(simulate("Speculation4", (0.83, 0.967, 0.34, 0.004), p, cfg), p)
    assert a == b


def test_classification_record():
    rec = report.classification_record(RegimeClassification("LimitCycle", period=62.8, amplitudes=(0.1, 0.2)))
    assert rec["name"] == "LimitCycle(period=62.8)" and rec["amplitudes"] == [0.1, 0.2]


def test_svg_render_breaks_on_non_finite():
    x = np.arange(10.0)
    y = x.copy()
    y[5] = math.inf
    doc = svg.render([("y", x, y)], "t<1", "x", "y")
    assert doc.count("<polyline") == 2
    assert 'viewBox="0 0 960 640"' in doc and "t&lt;1" in doc


def test_svg_decimates_long_series():
    x = np.linspace(0, 1, 50001)
    doc = svg.render([("y", x, np.sin(x))], "long", "x", "y")
    points = re.search(r'points="([^"]*)"', doc).group(1).split()
    assert len(points) <= 2001


def test_trajectory_plots(tmp_path: Path):
    p = speculation_params()
    traj = simulate("Speculation4", (0.83, 0.967, 0.34, 0.004), p, IntegratorConfig(t_end=30))
    files = svg.trajectory_plots(traj.times, traj.primal, traj.observables, tmp_path, "run", (10, 20))
    names = sorted(f.name for f in files)
    assert names == ["phase_b_f.svg", "phase_lambda_b.svg", "phase_omega_b.svg", "series_b.svg", "series_f.svg",
                     "series_i_g.svg", "series_lambda.svg", "series_omega.svg"]
    assert all(f.read_text().startswith("<svg") for f in files)
