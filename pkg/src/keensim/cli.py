"""``keensim`` command line.

Exit status: 0 when a command ran (an absent equilibrium or an Undetermined
regime is a finding, not a failure), 1 for usage and scenario errors, 2 for
I/O errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from . import report, svg
from .equilibria import enumerate_equilibria
from .errors import KeenError, ScenarioError
from .integrate import RegimeClassification, classify_asymptotic, envelope_decay_rate, simulate
from .params import ModelParams
from .scenario import ScenarioFile, expected_verdicts, registry_names, registry_text, load_registry, \
    parse_scenario, resolve, serialize_scenario
from .stability import classify

DEFAULT_OUT = "keensim-out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which is reserved for I/O
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--out", default=d(None), help="output directory (default $KEENSIM_OUT or ./keensim-out)")
    parser.add_argument("--format", choices=("table", "json"), default=d("table"))
    parser.add_argument("--plots", action="store_true", default=d(False), help="write SVG plots")
    parser.add_argument("--tol", type=float, default=d(None), help="relative integration tolerance")
    parser.add_argument("--t-end", type=float, default=d(None), dest="t_end", help="simulated years")
    parser.add_argument("--seed-registry", default=d(None), metavar="NAME",
                        help="copy a registry scenario into the output directory as an editable file")
    parser.add_argument("--workers", type=int, default=d(None), help="sweep worker processes")


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="keensim", description="Keen debt-dynamics models: equilibria, stability, simulation.")
    root.add_argument("--list", action="store_true", help="list registry scenarios and exit")
    _common(root, suppress=False)
    sub = root.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("list", help="list registry scenarios")
    for name, text in (("equilibria", "enumerate equilibria"), ("stability", "local stability of equilibria"),
                       ("simulate", "integrate and classify the long-run regime"),
                       ("sweep", "run every cell of a sweep block")):
        p = sub.add_parser(name, help=text)
        p.add_argument("scenario", help="scenario file path or @registry-name")
    for p in sub.choices.values():
        _common(p, suppress=True)
    return root


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("KEENSIM_OUT") or DEFAULT_OUT)


def _with_overrides(sc: ScenarioFile, args) -> ScenarioFile:
    cfg = sc.integrator
    try:
        if args.t_end is not None:
            cfg = dataclasses.replace(cfg, t_end=args.t_end)
        if args.tol is not None:
            cfg = dataclasses.replace(cfg, rel_tol=args.tol, abs_tol=min(cfg.abs_tol, args.tol * 1e-2))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return dataclasses.replace(sc, integrator=cfg)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def equilibrium_records(sc: ScenarioFile, params: ModelParams | None = None,
                        with_stability: bool = False) -> list[dict[str, Any]]:
    params = params or sc.params
    rows = []
    for point in enumerate_equilibria(params, sc.system):
        rep = classify(point, params) if with_stability and point.exists else None
        rows.append(report.equilibrium_record(point, rep))
    return rows


def cmd_list(args) -> dict[str, Any]:
    entries = []
    for name in registry_names():
        sc = load_registry(name)
        entries.append({"name": name, "system": sc.system.value, "description": sc.description,
                        "sweep_cells": len(sc.sweep.values) if sc.sweep else 0})
    if args.format == "json":
        sys.stdout.write(report.dumps(entries))
    else:
        width = max(len(e["name"]) for e in entries)
        for e in entries:
            sys.stdout.write(f"{e['name'].ljust(width)}  {e['system']:<13} {e['description']}\n")
    return {"scenarios": entries}


def cmd_tables(sc: ScenarioFile, args, with_stability: bool) -> dict[str, Any]:
    records = equilibrium_records(sc, with_stability=with_stability)
    doc: dict[str, Any] = {"scenario": sc.name, "system": sc.system.value, "equilibria": records}
    if with_stability:
        fixture = expected_verdicts(sc.name)
        if fixture is not None:
            doc["verdict_fixture_match"] = report.verdict_fixture(records) == fixture
    if args.format == "json":
        sys.stdout.write(report.dumps(doc))
    else:
        sys.stdout.write(f"scenario {sc.name} ({sc.system.value})\n\n")
        sys.stdout.write(report.equilibrium_table(records))
        if "verdict_fixture_match" in doc:
            sys.stdout.write(f"\nverdict fixture: {'match' if doc['verdict_fixture_match'] else 'MISMATCH'}\n")
    return doc


def run_one(sc: ScenarioFile, params: ModelParams, run_dir: Path, plots: bool) -> dict[str, Any]:
    """Integrate, classify and write the per-run files.  Returns the run summary."""
    traj = simulate(sc.system, sc.initial, params, sc.integrator)
    if traj.stalled:
        regime = RegimeClassification("Undetermined", evidence={"stalled": True, "diagnostic": traj.diagnostic})
    else:
        regime = classify_asymptotic(traj, params)
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    csv_path = run_dir / "trajectory.csv"
    csv_path.write_text(report.trajectory_csv(traj, params), encoding="utf-8")
    manifest.append(csv_path)
    record = report.classification_record(regime)
    record["lambda_decay_rate"] = envelope_decay_rate(traj.times, traj.primal[:, 1])
    record["segments"] = [[t, s.value] for t, s in traj.system_segments]
    record["stats"] = traj.stats
    cls_path = run_dir / "classification.json"
    cls_path.write_text(report.dumps(record), encoding="utf-8")
    manifest.append(cls_path)
    if plots:
        manifest += svg.trajectory_plots(traj.times, traj.primal, traj.observables, run_dir / "plots",
                                         sc.name, sc.plot_window)
    return {"classification": record, "stalled": traj.stalled, "diagnostic": traj.diagnostic,
            "files": [str(p) for p in manifest]}


def cmd_simulate(sc: ScenarioFile, args) -> dict[str, Any]:
    if sc.sweep is not None:
        return cmd_sweep(sc, args)
    run_dir = _out_dir(args) / sc.name
    plots = args.plots or "plots" in sc.outputs
    result = run_one(sc, sc.params, run_dir, plots)
    doc: dict[str, Any] = {"scenario": sc.name, "system": sc.system.value}
    if "equilibria" in sc.outputs or "stability" in sc.outputs:
        doc["equilibria"] = equilibrium_records(sc, with_stability="stability" in sc.outputs)
    doc |= result
    summary = run_dir / "report.json"
    doc["files"].append(str(summary))
    summary.write_text(report.dumps(doc), encoding="utf-8")
    if result["stalled"]:
        sys.stderr.write(f"warning: integrator stalled: {result['diagnostic']}; regime reported as Undetermined\n")
    if args.format == "json":
        sys.stdout.write(report.dumps(doc))
    else:
        sys.stdout.write(f"scenario {sc.name} ({sc.system.value})\n")
        if "equilibria" in doc:
            sys.stdout.write("\n" + report.equilibrium_table(doc["equilibria"]))
        sys.stdout.write(f"\nclassification: {result['classification']['name']}\n\nfiles:\n")
        sys.stdout.write("".join(f"  {f}\n" for f in doc["files"]))
    return doc


def _cell_dir(k: int, cell: dict[str, float]) -> str:
    return f"cell_{k:03d}_" + "_".join(f"{path.split('.')[-1]}={value:g}" for path, value in cell.items())


def _sweep_worker(job: tuple[str, dict[str, float], str, bool]) -> dict[str, Any]:
    text, cell, run_dir, plots = job
    sc = parse_scenario(text)
    try:
        return run_one(sc, sc.params_for(cell), Path(run_dir), plots)
    except (KeenError, ArithmeticError, ValueError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}", "files": []}


SUMMARY_COLUMNS = ("cell", "kind", "regime", "period", "amplitude_omega", "amplitude_lambda",
                   "nearest_equilibrium", "terminal_distance", "lambda_decay_rate", "error")


def summary_csv(parameters: Sequence[str], rows: Sequence[dict[str, Any]]) -> str:
    lines = [",".join(("cell",) + tuple(parameters) + SUMMARY_COLUMNS[1:])]

    def num(v):
        return "" if v is None or (isinstance(v, float) and math.isnan(v)) else report.fmt17(v)

    for row in rows:
        cls = row.get("classification") or {}
        amps = cls.get("amplitudes") or []
        dists = (cls.get("evidence") or {}).get("terminal_distances") or {}
        nearest = min(dists, key=dists.get) if dists else ""
        fields = [str(row["cell"])] + [report.fmt17(row["values"][p]) for p in parameters]
        fields += [cls.get("kind", "Error"), cls.get("name", ""), num(cls.get("period")),
                   num(amps[0] if amps else None), num(amps[1] if len(amps) > 1 else None),
                   nearest, num(dists[nearest]) if nearest else "", num(cls.get("lambda_decay_rate")),
                   row.get("error", "").replace(",", ";")]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def cmd_sweep(sc: ScenarioFile, args) -> dict[str, Any]:
    if sc.sweep is None:
        raise UsageError(f"scenario {sc.name} has no sweep block")
    base = _out_dir(args) / sc.name
    base.mkdir(parents=True, exist_ok=True)
    text = serialize_scenario(sc)
    plots = args.plots or "plots" in sc.outputs
    cells = sc.sweep.cells()
    jobs = [(text, cell, str(base / _cell_dir(k, cell)), plots) for k, cell in enumerate(cells)]
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    if workers < 1:
        raise UsageError("--workers must be at least 1")
    if workers == 1 or len(jobs) == 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    rows = [{"cell": k, "values": cell} | res for k, (cell, res) in enumerate(zip(cells, results))]
    summary_path = base / "summary.csv"
    summary_path.write_text(summary_csv(sc.sweep.parameters, rows), encoding="utf-8")
    doc = {"scenario": sc.name, "system": sc.system.value, "parameters": list(sc.sweep.parameters),
           "cells": rows, "files": [str(summary_path)] + [f for r in rows for f in r["files"]]}
    json_path = base / "summary.json"
    doc["files"].append(str(json_path))
    json_path.write_text(report.dumps(doc), encoding="utf-8")
    if args.format == "json":
        sys.stdout.write(report.dumps(doc))
    else:
        sys.stdout.write(f"scenario {sc.name}: {len(rows)} cells\n\n")
        table_rows = []
        for r in rows:
            cls = r.get("classification") or {}
            vals = ", ".join(f"{p}={r['values'][p]:g}" for p in sc.sweep.parameters)
            table_rows.append([str(r["cell"]), vals, cls.get("name", r.get("error", ""))])
        sys.stdout.write(report._table(["cell", "values", "regime"], table_rows))
        sys.stdout.write(f"\nsummary: {summary_path}\n")
    return doc


def seed_registry(name: str, args) -> Path:
    text = registry_text(name)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    path.write_text(text, encoding="utf-8")
    sys.stderr.write(f"seeded {path}\n")
    return path


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed_registry:
            seed_registry(args.seed_registry, args)
        if args.list or args.command == "list":
            cmd_list(args)
            return 0
        if args.command is None:
            if args.seed_registry:
                return 0
            parser.print_usage(sys.stderr)
            sys.stderr.write("keensim: error: a command is required\n")
            return 1
        sc = _with_overrides(resolve(args.scenario), args)
        if args.command == "equilibria":
            cmd_tables(sc, args, with_stability=False)
        elif args.command == "stability":
            cmd_tables(sc, args, with_stability=True)
        elif args.command == "simulate":
            cmd_simulate(sc, args)
        else:
            cmd_sweep(sc, args)
    except ScenarioError as exc:
        sys.stderr.write(f"keensim: scenario error: {exc}\n")
        return 1
    except UsageError as exc:
        sys.stderr.write(f"keensim: error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"keensim: I/O error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
