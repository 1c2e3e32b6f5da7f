import json
from pathlib import Path

import pytest

from keensim.errors import ScenarioError
from keensim.scenario import (expected_verdicts, load_registry, parse_scenario, registry_names, registry_text,
                              resolve, schema, scenario_to_dict, serialize_scenario)

MINIMAL = {
    "name": "basic_min",
    "system": "Basic3",
    "params": {
        "econ": {"alpha": 0.025, "beta": 0.02, "delta": 0.01, "nu": 3, "r": 0.03},
        "phillips": {"phi0": 0.04006410256410257, "phi1": 6.410256410256412e-05},
        "invest": {"kappa0": -0.0065, "kappa1": -5, "kappa2": 20},
    },
    "initial": [0.9, 0.9, 0.3],
}


def _doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    d.update(changes)
    return d


def _error(doc) -> ScenarioError:
    with pytest.raises(ScenarioError) as info:
        parse_scenario(json.dumps(doc) if not isinstance(doc, str) else doc)
    return info.value


def test_minimal_scenario_gets_defaults():
    sc = parse_scenario(json.dumps(MINIMAL))
    assert sc.integrator.rel_tol == 1e-9 and sc.integrator.sample_dt == 0.05
    assert sc.outputs == ("equilibria", "stability") and sc.sweep is None


def test_employment_rate_out_of_range():
    err = _error(_doc(initial=[0.9, 1.2, 0.3]))
    assert err.pointer == "/initial/1" and "employment rate must lie in [0,1)" in str(err)


def test_dimension_mismatch():
    err = _error(_doc(initial=[0.9, 0.9, 0.3, 0.1]))
    assert "expects 3 initial coordinates" in str(err)


def test_unknown_keys_are_rejected_with_pointer():
    d = _doc()
    d["params"]["econ"]["zeta"] = 1
    assert _error(d).pointer == "/params/econ"
    assert _error(_doc(colour="red")).pointer == "/"


def test_non_finite_numbers_are_rejected():
    text = json.dumps(MINIMAL).replace("0.3]", "NaN]")
    assert "non-finite" in str(_error(text))


def test_invalid_json():
    assert "invalid JSON" in str(_error("{"))


def test_parameter_invariant_violation():
    d = _doc()
    d["params"]["econ"]["nu"] = -1
    assert _error(d).pointer == "/params"


def test_missing_price_block():
    assert _error(_doc(system="Inflation3")).pointer == "/params/price"


def test_sweep_validation():
    assert _error(_doc(sweep={"parameter": "econ.r", "values": []})).pointer == "/sweep/values"
    assert "unknown parameter path" in str(_error(_doc(sweep={"parameter": "econ.zeta", "values": [1.0]})))
    assert _error(_doc(sweep={"parameter": "econ.r", "values": [-1.0]})).pointer == "/sweep"
    assert _error(_doc(sweep={"parameters": ["econ.r", "econ.nu"], "values": [[0.02]]})).pointer == \
        "/sweep/values/0"


def test_sweep_forms():
    one = parse_scenario(json.dumps(_doc(sweep={"parameter": "econ.r", "values": [0.02, 0.03]})))
    assert one.sweep.cells() == [{"econ.r": 0.02}, {"econ.r": 0.03}]
    grid = parse_scenario(json.dumps(_doc(sweep={"parameters": ["econ.r", "econ.nu"],
                                                 "grid": [[0.02, 0.03], [2.0, 3.0]]})))
    assert len(grid.sweep.cells()) == 4 and grid.sweep.cells()[1] == {"econ.r": 0.02, "econ.nu": 3.0}
    assert grid.params_for(grid.sweep.cells()[3]).econ.nu == 3.0


def test_plot_window_must_increase():
    assert _error(_doc(plot_window=[10, 5])).pointer == "/plot_window"


def test_integrator_values_checked():
    assert _error(_doc(integrator={"t_end": 0})).pointer == "/integrator/t_end"


def test_golden_file_round_trip():
    sc = load_registry("keen2013_inflation")
    again = parse_scenario(serialize_scenario(sc))
    assert again == sc
    assert serialize_scenario(again) == serialize_scenario(sc)


@pytest.mark.parametrize("name", registry_names())
def test_every_registry_scenario_parses_and_round_trips(name):
    sc = load_registry(name)
    assert sc.name == name and sc.description
    assert parse_scenario(serialize_scenario(sc)) == sc
    assert scenario_to_dict(sc)["system"] == sc.system.value


def test_registry_covers_the_figures_and_tables():
    names = set(registry_names())
    assert {"keen2013_basic", "keen2013_inflation", "keen2013_speculation", "fig_effect_of_price",
            "fig_effect_xi_on_existence", "fig_convergent", "fig_limit_cycle", "fig_limitcycle_expl",
            "fig_divergent", "fig_limit_cycle_sweep"} <= names


def test_psi1_sweep_grid():
    sc = load_registry("fig_limit_cycle_sweep")
    values = [row[0] for row in sc.sweep.values]
    assert len(values) == 21 and values[0] == 0.0 and values[-1] == 0.04
    assert sc.integrator.t_end == 1500


def test_fixture_and_resolve(tmp_path: Path):
    assert json.loads(expected_verdicts("keen2013_inflation"))["Good1[+]"] == "stable"
    assert expected_verdicts("keen2013_basic") is None
    path = tmp_path / "s.json"
    path.write_text(registry_text("keen2013_basic"))
    assert resolve(str(path)) == resolve("@keen2013_basic")
    with pytest.raises(ScenarioError):
        resolve("@does_not_exist")


def test_docs_schema_is_the_shipped_schema():
    docs = Path(__file__).resolve().parents[1] / "docs" / "scenario.schema.json"
    assert json.loads(docs.read_text()) == schema()
