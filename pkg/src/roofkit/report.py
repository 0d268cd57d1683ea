"""Workload reports in Markdown, CSV and JSON.

All numeric fields are rendered at 6 significant digits and emission is
deterministic: same inputs, same bytes.
"""

from __future__ import annotations

import json
from typing import Mapping

from .advisor import ModeCatalog, sweep_modes
from .cost import CostBreakdown, CostMode, WorkloadCost, arithmetic_intensity
from .errors import SchemaError
from .ir import LayerKind, ModelGraph
from .roofline import (DeviceRoofline, balance_points, classify_workload,
                       peak_energy_efficiency, predict_energy, predict_runtime)

SCHEMA_ID = "roofkit-report/1"

_EXTRAPOLATED_KINDS = {LayerKind.LSTMCell, LayerKind.Attention, LayerKind.Embedding,
                       LayerKind.Softmax, LayerKind.LayerNorm}


def sig(x) -> str:
    """6-significant-digit rendering used across all report formats."""
    if isinstance(x, bool):
        return str(x).lower()
    return format(x, ".6g")


def _layer_rows(workload: WorkloadCost, graph: ModelGraph | None):
    kinds: Mapping[str, str] = {}
    if graph is not None:
        kinds = {l.id: l.kind.value for l in graph.layers}
    rows = []
    for lid, c in workload.per_layer.items():
        ai = c.flop / c.mop if c.mop else 0.0
        rows.append((lid, kinds.get(lid, "?"), c.flop, c.mop, ai))
    return rows


def layer_cost_csv(workload: WorkloadCost, graph: ModelGraph | None = None) -> str:
    """Per-layer cost dump: layer_id,kind,W_flop,Q_bytes,AI."""
    lines = ["layer_id,kind,W_flop,Q_bytes,AI"]
    for lid, kind, w, q, ai in _layer_rows(workload, graph):
        lines.append(f"{lid},{kind},{sig(w)},{sig(q)},{sig(ai)}")
    return "\n".join(lines) + "\n"


def _training_note(workload: WorkloadCost, graph: ModelGraph | None) -> str | None:
    if workload.mode is not CostMode.Training or graph is None:
        return None
    soft = sorted({l.kind.value for l in graph.layers if l.kind in _EXTRAPOLATED_KINDS})
    if not soft:
        return None
    return ("backward costs for " + ", ".join(soft) +
            " extrapolate the convolution gradient pattern and are less exact "
            "than convolution/linear training costs")


def _prediction_dict(d: DeviceRoofline, total: CostBreakdown) -> dict:
    t = predict_runtime(d, total)
    e = predict_energy(d, total)
    cls = classify_workload(d, arithmetic_intensity(total))
    b = balance_points(d)
    return {
        "mode": d.mode.key(),
        "device": d.device,
        "time_s": float(sig(t.seconds)),
        "time_class": t.boundedness.value,
        "energy_j": float(sig(e.joules)),
        "energy_breakdown_j": {"flop": float(sig(e.flop_j)), "mop": float(sig(e.mop_j)),
                               "static": float(sig(e.static_j))},
        "time_bound_class": cls.time_class.value,
        "energy_bound_class": cls.energy_class.value,
        "crossover": cls.crossover,
        "beta_tau": float(sig(b.beta_tau)),
        "beta_eps_static": float(sig(b.beta_eps)),
        "beta_eps_no_static": float(sig(b.beta_eps_zero)),
        "peak_eff_static_flop_j": float(sig(peak_energy_efficiency(d, True))),
        "peak_eff_no_static_flop_j": float(sig(peak_energy_efficiency(d, False))),
    }


def report_dict(workload: WorkloadCost, target=None, graph: ModelGraph | None = None,
                title: str = "") -> dict:
    total = workload.total
    doc = {
        "schema": SCHEMA_ID,
        "title": title or (graph.name if graph is not None else ""),
        "mode": workload.mode.value,
        "batch": workload.batch,
        "precision": workload.precision.name,
        "totals": {
            "flop": total.flop,
            "bytes": total.mop,
            "ai": float(sig(arithmetic_intensity(total))) if total.mop else None,
            "flop_components": {"main": total.w_main, "bias": total.w_bias,
                                "act": total.w_act},
            "byte_components": {"input": total.q_input, "weight": total.q_weight,
                                "bias": total.q_bias, "output": total.q_output},
        },
        "layers": [
            {"id": lid, "kind": kind, "flop": w, "bytes": q, "ai": float(sig(ai))}
            for lid, kind, w, q, ai in _layer_rows(workload, graph)
        ],
    }
    note = _training_note(workload, graph)
    if note:
        doc["notes"] = [note]
    if isinstance(target, DeviceRoofline):
        doc["prediction"] = _prediction_dict(target, total)
    elif isinstance(target, ModeCatalog):
        doc["predictions"] = [_prediction_dict(target[m], total) for m in target]
    elif target is not None:
        raise SchemaError(f"report target must be a DeviceRoofline or ModeCatalog, "
                          f"got {type(target).__name__}")
    return doc


def _md(doc: dict) -> str:
    out = [f"# roofline report: {doc['title']}", ""]
    out.append(f"- mode: {doc['mode']}  batch: {doc['batch']}  precision: {doc['precision']}")
    t = doc["totals"]
    out.append(f"- total FLOP: {sig(t['flop'])}  total bytes: {sig(t['bytes'])}  "
               f"AI: {sig(t['ai']) if t['ai'] is not None else 'n/a'}")
    for note in doc.get("notes", []):
        out.append(f"- note: {note}")
    preds = doc.get("predictions") or ([doc["prediction"]] if "prediction" in doc else [])
    if preds:
        out += ["", "## predictions", "",
                "| mode | T (s) | E (J) | time class | energy class | crossover "
                "| beta_tau | beta_eps | beta_eps (pi0=0) |",
                "|---|---|---|---|---|---|---|---|---|"]
        for p in preds:
            out.append(f"| {p['mode']} | {sig(p['time_s'])} | {sig(p['energy_j'])} "
                       f"| {p['time_bound_class']} | {p['energy_bound_class']} "
                       f"| {str(p['crossover']).lower()} | {sig(p['beta_tau'])} "
                       f"| {sig(p['beta_eps_static'])} | {sig(p['beta_eps_no_static'])} |")
    out += ["", "## layers", "", "| layer | kind | W (FLOP) | Q (bytes) | AI |",
            "|---|---|---|---|---|"]
    for l in doc["layers"]:
        out.append(f"| {l['id']} | {l['kind']} | {sig(l['flop'])} | {sig(l['bytes'])} "
                   f"| {sig(l['ai'])} |")
    return "\n".join(out) + "\n"


def _csv(doc: dict) -> str:
    lines = [f"# {doc['schema']} title={doc['title']} mode={doc['mode']} "
             f"batch={doc['batch']} precision={doc['precision']}"]
    t = doc["totals"]
    lines.append(f"# totals flop={sig(t['flop'])} bytes={sig(t['bytes'])} "
                 f"ai={sig(t['ai']) if t['ai'] is not None else 'n/a'}")
    preds = doc.get("predictions") or ([doc["prediction"]] if "prediction" in doc else [])
    for p in preds:
        lines.append(f"# prediction mode={p['mode']} time_s={sig(p['time_s'])} "
                     f"energy_j={sig(p['energy_j'])} time_class={p['time_bound_class']} "
                     f"energy_class={p['energy_bound_class']} "
                     f"crossover={str(p['crossover']).lower()}")
    lines.append("layer_id,kind,W_flop,Q_bytes,AI")
    for l in doc["layers"]:
        lines.append(f"{l['id']},{l['kind']},{sig(l['flop'])},{sig(l['bytes'])},{sig(l['ai'])}")
    return "\n".join(lines) + "\n"


def emit_report(workload: WorkloadCost, target=None, fmt: str = "md",
                graph: ModelGraph | None = None, title: str = "") -> str:
    """Render the workload report against a device or a whole catalog."""
    doc = report_dict(workload, target, graph, title)
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "md":
        return _md(doc)
    if fmt == "csv":
        return _csv(doc)
    raise SchemaError(f"unknown report format {fmt!r}; expected csv, md or json")
