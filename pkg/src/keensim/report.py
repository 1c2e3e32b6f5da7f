"""Human tables, JSON documents and trajectory CSV."""

from __future__ import annotations

import io
import json
import math
from typing import Any, Sequence

import numpy as np

from .equilibria import EquilibriumPoint
from .integrate import RegimeClassification, Trajectory
from .params import ModelParams
from .stability import StabilityReport

CSV_COLUMNS = ("t", "omega", "lambda", "b", "f", "q", "v", "x", "pi", "i", "g", "g_nominal", "c_share")
_COORD_COLUMNS = ("omega", "lambda", "b", "f", "q", "v", "x")
_OBS_COLUMNS = ("pi", "i", "g", "g_nominal", "c_share")


def fmt4(x: float | None) -> str:
    if x is None:
        return "-"
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.4f}"


def fmt17(x: float) -> str:
    return "%.17g" % x


def json_safe(obj: Any) -> Any:
    """Map infinities to the strings ``"inf"``/``"-inf"`` and NaN to null."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [json_safe(v) for v in obj]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(json_safe(obj), indent=2) + "\n"


# ---------------------------------------------------------------------------
# equilibria and stability
# ---------------------------------------------------------------------------

def equilibrium_record(point: EquilibriumPoint, report: StabilityReport | None = None) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "label": point.name,
        "exists": point.exists,
        "coords": list(point.coords),
        "residual": point.residual,
    }
    if point.defining_system is not None and point.defining_system is not point.system:
        rec["defining_system"] = point.defining_system.value
        rec["defining_coords"] = list(point.defining_coords or ())
    if point.aux is not None:
        rec["inflation"] = point.aux.i
        rec["profit_share"] = point.aux.pi
    if not point.exists:
        rec["reason"] = point.reason
    if report is not None:
        rec["verdict"] = report.final
        rec["eigen_real_parts"] = list(report.eigen_real_parts)
        rec["charpoly"] = list(report.charpoly)
        rec["rh_verdict"] = report.rh_verdict
        rec["printed_conditions"] = [
            {"name": c.name, "formula_id": c.formula_id, "holds": c.holds, "kind": c.kind, "note": c.note}
            for c in report.printed_conditions
        ]
    return rec


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[k]) for r in rows)) if rows else len(h) for k, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _coords(values: Sequence[float]) -> str:
    return "(" + ", ".join(fmt4(v) for v in values) + ")"


def equilibrium_table(records: Sequence[dict[str, Any]]) -> str:
    with_verdicts = any("verdict" in r for r in records)
    header = ["label", "coords", "residual"] + (["verdict", "max Re"] if with_verdicts else [])
    rows = []
    notes = []
    for r in records:
        if not r["exists"]:
            row = [r["label"], "absent", "-"] + (["-", "-"] if with_verdicts else [])
            notes.append(f"{r['label']}: {r.get('reason', '')}")
        else:
            res = r["residual"]
            row = [r["label"], _coords(r["coords"]), "-" if res is None else f"{res:.1e}"]
            if with_verdicts:
                re = r.get("eigen_real_parts") or []
                row += [r.get("verdict", "-"), fmt4(max(re)) if re else "-"]
            for c in r.get("printed_conditions", []):
                if c["note"]:
                    notes.append(f"{r['label']}: {c['name']} ({c['formula_id']}) holds={c['holds']}: {c['note']}")
        rows.append(row)
    text = _table(header, rows)
    if notes:
        text += "\nnotes:\n" + "".join(f"  {n}\n" for n in notes)
    return text


def verdict_fixture(records: Sequence[dict[str, Any]]) -> str:
    """Canonical verdict map over the equilibria that exist."""
    verdicts = {r["label"]: r["verdict"] for r in records if r["exists"] and "verdict" in r}
    return json.dumps(verdicts, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def classification_record(c: RegimeClassification) -> dict[str, Any]:
    return {
        "kind": c.kind,
        "name": c.name,
        "label": c.label,
        "variant": c.variant,
        "period": c.period,
        "amplitudes": list(c.amplitudes) if c.amplitudes is not None else None,
        "direction": c.direction,
        "evidence": c.evidence,
    }


def csv_header(params: ModelParams) -> tuple[str, ...]:
    return CSV_COLUMNS + (("p",) if params.price is not None else ())


def trajectory_csv(traj: Trajectory, params: ModelParams) -> str:
    """Samples in the active coordinates; fields outside the active system stay empty."""
    header = csv_header(params)
    with_price = "p" in header
    price = traj.observables.get("p")
    obs = [traj.observables[name] for name in _OBS_COLUMNS]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for k in range(traj.times.size):
        active = traj.system_at(k).coords
        fields = dict(zip(active, traj.states[k]))
        row = [fmt17(traj.times[k])]
        row += [fmt17(fields[c]) if c in fields else "" for c in _COORD_COLUMNS]
        row += [fmt17(series[k]) for series in obs]
        if with_price:
            row.append(fmt17(price[k]) if price is not None else "")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def read_trajectory_csv(text: str) -> dict[str, np.ndarray]:
    """Columns of an emitted CSV; empty fields come back as NaN."""
    lines = text.splitlines()
    header = lines[0].split(",")
    cols: dict[str, list[float]] = {h: [] for h in header}
    for line in lines[1:]:
        for h, v in zip(header, line.split(",")):
            cols[h].append(float(v) if v else math.nan)
    return {h: np.array(v) for h, v in cols.items()}
