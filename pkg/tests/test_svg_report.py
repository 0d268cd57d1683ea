import json
import re

import pytest

from roofkit.advisor import ModeCatalog
from roofkit.cost import aggregate_workload
from roofkit.errors import EmptySpec, SchemaError
from roofkit.ir import Precision
from roofkit.report import emit_report, layer_cost_csv, report_dict
from roofkit.roofline import DeviceRoofline, PowerMode, WorkloadPoint
from roofkit.shapes import infer_shapes
from roofkit.svgplot import PlotSpec, PlotVariant, render_roofline_svg
from roofkit import zoo


def no_static(maxn):
    return DeviceRoofline(peak_flops=maxn.peak_flops, peak_bw=maxn.peak_bw,
                          eps_flop=maxn.eps_flop, eps_mop=maxn.eps_mop,
                          static_power=0.0, mode=maxn.mode)


def test_svg_deterministic(maxn):
    spec = PlotSpec(rooflines=(maxn,), points=(WorkloadPoint(19.3, 2.54e12, 6e10, "cnn"),))
    assert render_roofline_svg(spec) == render_roofline_svg(spec)


def test_svg_time_kink_coordinate(maxn):
    svg = render_roofline_svg(PlotSpec(rooflines=(maxn,)))
    m = re.search(r'data-balance-ai="([0-9.eE+-]+)"', svg)
    assert m, "kink annotation missing"
    assert float(m.group(1)) == pytest.approx(89.4, abs=0.1)


def test_svg_energy_asymptote_without_static(maxn):
    d = no_static(maxn)
    svg = render_roofline_svg(PlotSpec(rooflines=(d,), variant=PlotVariant.EnergyNoStatic))
    m = re.search(r'data-peak-eff="([0-9.eE+-]+)"', svg)
    assert float(m.group(1)) == pytest.approx(1.0 / d.eps_flop, rel=0.01)
    m = re.search(r'data-samples="(\d+)"', svg)
    assert int(m.group(1)) >= 256


def test_svg_points_within_range_appear(maxn):
    pts = (WorkloadPoint(19.3, 2.54e12, 0, "a"), WorkloadPoint(0.67, 1.9e10, 0, "b"))
    svg = render_roofline_svg(PlotSpec(rooflines=(maxn,), points=pts))
    assert 'data-point="a"' in svg
    assert 'data-point="b"' in svg


def test_svg_no_points_still_valid(maxn):
    svg = render_roofline_svg(PlotSpec(rooflines=(maxn,)))
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "<circle" not in svg


def test_svg_requires_roofline():
    with pytest.raises(EmptySpec):
        PlotSpec(rooflines=())


def workload():
    g = zoo.resnet50()
    return g, aggregate_workload(infer_shapes(g, 1))


def test_report_md_resnet_on_maxn(maxn):
    g, cost = workload()
    md = emit_report(cost, maxn, "md", g)
    assert "# roofline report: resnet50" in md
    m = re.search(r"AI: ([0-9.]+)", md)
    assert float(m.group(1)) == pytest.approx(19.33, rel=0.05)
    assert "| memory-bound | memory-bound |" in md
    assert "| conv1 | Conv2d |" in md


def test_report_json_roundtrip(maxn):
    g, cost = workload()
    doc = json.loads(emit_report(cost, maxn, "json", g))
    assert doc["schema"] == "roofkit-report/1"
    assert doc["totals"]["flop"] == cost.total.flop
    assert doc["prediction"]["crossover"] is False
    assert json.loads(json.dumps(doc)) == doc


def test_report_csv_layer_table(maxn):
    g, cost = workload()
    csv_text = emit_report(cost, maxn, "csv", g)
    lines = [l for l in csv_text.splitlines() if not l.startswith("#")]
    assert lines[0] == "layer_id,kind,W_flop,Q_bytes,AI"
    assert len(lines) == 1 + len(cost.per_layer)


def test_layer_cost_csv_columns():
    g, cost = workload()
    text = layer_cost_csv(cost, g)
    first_data = text.splitlines()[1].split(",")
    assert len(first_data) == 5
    assert first_data[1] == "Conv2d"


def test_report_catalog_sorted_blocks(maxn):
    g, cost = workload()
    other = DeviceRoofline(peak_flops=9.5e12, peak_bw=141.3e9, eps_flop=3.61e-12,
                           eps_mop=141.38e-12, static_power=15.2,
                           mode=PowerMode(12, 2200, 700, 3200))
    catalog = ModeCatalog({maxn.mode: maxn, other.mode: other})
    doc = report_dict(cost, catalog, g)
    modes = [p["mode"] for p in doc["predictions"]]
    assert modes == [m.key() for m in sorted([maxn.mode, other.mode])]


def test_report_rejects_unknown_format(maxn):
    g, cost = workload()
    with pytest.raises(SchemaError):
        emit_report(cost, maxn, "yaml", g)


def test_report_training_note():
    g = zoo.lstm_lm()
    from roofkit.cost import CostMode
    cost = aggregate_workload(infer_shapes(g, 1), CostMode.Training)
    doc = report_dict(cost, None, g)
    assert any("extrapolate" in n for n in doc.get("notes", []))
    md = emit_report(cost, None, "md", g)
    assert "note:" in md


def test_report_deterministic(maxn):
    g, cost = workload()
    for fmt in ("md", "csv", "json"):
        assert emit_report(cost, maxn, fmt, g) == emit_report(cost, maxn, fmt, g)
