"""Declarative scenario files and the built-in registry.

A scenario is a JSON document naming a system, its parameters, an initial
state, integrator settings, the requested outputs and optionally a parameter
sweep.  Validation is two-stage: the JSON schema shipped in
``scenario.schema.json`` checks structure, then the parameter records and the
initial state are checked against the model's own invariants.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
from dataclasses import dataclass
from importlib import resources
from typing import Any

import jsonschema

from .errors import ParameterError, ScenarioError
from .integrate import IntegratorConfig
from .model import SystemId
from .params import ModelParams

OUTPUT_KINDS = ("equilibria", "stability", "trajectory", "classification", "plots")
_PACKAGE = "keensim"


@dataclass(frozen=True)
class SweepSpec:
    parameters: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def cells(self) -> list[dict[str, float]]:
        return [dict(zip(self.parameters, row)) for row in self.values]


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    system: SystemId
    params: ModelParams
    initial: tuple[float, ...]
    integrator: IntegratorConfig
    outputs: tuple[str, ...]
    sweep: SweepSpec | None = None
    description: str = ""
    plot_window: tuple[float, float] | None = None

    def params_for(self, cell: dict[str, float]) -> ModelParams:
        p = self.params
        for path, value in cell.items():
            p = p.with_value(path, value)
        return p


def schema() -> dict[str, Any]:
    text = resources.files(_PACKAGE).joinpath("scenario.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _reject_constant(token: str) -> float:
    raise ScenarioError(f"non-finite number {token} is not allowed")


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def parse_scenario(text: str) -> ScenarioFile:
    """Parse and validate a scenario document."""
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    return scenario_from_dict(data)


def scenario_from_dict(data: Any) -> ScenarioFile:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, _pointer(err.absolute_path))

    system = SystemId(data["system"])
    try:
        params = ModelParams.from_dict(data["params"])
    except ParameterError as exc:
        raise ScenarioError(str(exc), "/params") from None
    if system is not SystemId.Basic3 and params.price is None:
        raise ScenarioError(f"{system.value} requires price parameters", "/params/price")
    if system.has_speculation and params.spec is None:
        raise ScenarioError(f"{system.value} requires speculation parameters", "/params/spec")

    initial = tuple(float(v) for v in data["initial"])
    if len(initial) != system.dim:
        raise ScenarioError(f"{system.value} expects {system.dim} initial coordinates, got {len(initial)}",
                            "/initial")
    if initial[0] < 0:
        raise ScenarioError("wage share must be non-negative", "/initial/0")
    if not 0 <= initial[1] < 1:
        raise ScenarioError("employment rate must lie in [0,1)", "/initial/1")

    try:
        integrator = IntegratorConfig(**data.get("integrator", {}))
    except ValueError as exc:
        raise ScenarioError(str(exc), "/integrator") from None

    sweep = None
    if "sweep" in data:
        block = data["sweep"]
        if "parameter" in block:
            paths = (block["parameter"],)
            rows = tuple((float(v),) for v in block["values"])
            where = "/sweep/parameter"
        else:
            paths = tuple(block["parameters"])
            if "grid" in block:
                rows = tuple(tuple(float(v) for v in combo) for combo in itertools.product(*block["grid"]))
                if len(block["grid"]) != len(paths):
                    raise ScenarioError("grid needs one value list per parameter", "/sweep/grid")
            else:
                rows = tuple(tuple(float(v) for v in row) for row in block["values"])
                bad = [k for k, row in enumerate(rows) if len(row) != len(paths)]
                if bad:
                    raise ScenarioError(f"row has {len(rows[bad[0]])} values for {len(paths)} parameters",
                                        f"/sweep/values/{bad[0]}")
            where = "/sweep/parameters"
        for path in paths:
            try:
                params.get_value(path)
            except ParameterError as exc:
                raise ScenarioError(str(exc), where) from None
        sweep = SweepSpec(parameters=paths, values=rows)
        for k, cell in enumerate(sweep.cells()):
            try:
                p = params
                for path, value in cell.items():
                    p = p.with_value(path, value)
            except ParameterError as exc:
                raise ScenarioError(f"sweep cell {k}: {exc}", "/sweep") from None

    window = data.get("plot_window")
    if window is not None and not window[0] < window[1]:
        raise ScenarioError("plot window must be increasing", "/plot_window")

    return ScenarioFile(
        name=data["name"],
        system=system,
        params=params,
        initial=initial,
        integrator=integrator,
        outputs=tuple(data.get("outputs", ["equilibria", "stability"])),
        sweep=sweep,
        description=data.get("description", ""),
        plot_window=tuple(window) if window is not None else None,
    )


def scenario_to_dict(sc: ScenarioFile) -> dict[str, Any]:
    params = sc.params.to_dict()
    for key in ("price", "spec"):
        if params[key] is None:
            del params[key]
    out: dict[str, Any] = {"name": sc.name}
    if sc.description:
        out["description"] = sc.description
    out |= {
        "system": sc.system.value,
        "params": params,
        "initial": list(sc.initial),
        "integrator": dataclasses.asdict(sc.integrator),
        "outputs": list(sc.outputs),
    }
    if sc.sweep is not None:
        out["sweep"] = {"parameters": list(sc.sweep.parameters), "values": [list(r) for r in sc.sweep.values]}
    if sc.plot_window is not None:
        out["plot_window"] = list(sc.plot_window)
    return out


def serialize_scenario(sc: ScenarioFile) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def _registry_dir():
    return resources.files(_PACKAGE).joinpath("scenarios")


def registry_names() -> list[str]:
    return sorted(p.name[:-5] for p in _registry_dir().iterdir() if p.name.endswith(".json"))


def registry_text(name: str) -> str:
    path = _registry_dir().joinpath(f"{name}.json")
    if not path.is_file():
        raise ScenarioError(f"no registry scenario named {name!r}")
    return path.read_text(encoding="utf-8")


def load_registry(name: str) -> ScenarioFile:
    return parse_scenario(registry_text(name))


def expected_verdicts(name: str) -> str | None:
    """Expected-verdict fixture text for a registry scenario, if one is shipped."""
    path = _registry_dir().joinpath("expected", f"{name}.verdicts.json")
    return path.read_text(encoding="utf-8") if path.is_file() else None


def resolve(ref: str) -> ScenarioFile:
    """``@name`` loads from the registry; anything else is a file path."""
    if ref.startswith("@"):
        return load_registry(ref[1:])
    with open(ref, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
