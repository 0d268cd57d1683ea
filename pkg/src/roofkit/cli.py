"""Command-line entry points.

Exit codes: 0 success, 2 input/schema error, 3 infeasible or empty
result, 4 internal error. PAGODA_NO_COLOR disables ANSI styling of
error messages.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .advisor import load_catalog, recommend_mode
from .calibration import calibrate_measurements, read_measurements_file
from .cost import (DEFAULT_ACTS, ActivationCostTable, CostMode, aggregate_workload,
                   batch_ai_sweep)
from .errors import InfeasibleBudget, InputError
from .ir import ModelGraph, Precision, parse_model
from .onnx_import import import_onnx
from .report import emit_report, sig
from .roofline import PowerMode, load_device_config, save_device_config
from .shapes import infer_shapes
from .svgplot import PlotSpec, PlotVariant, render_roofline_svg
from . import zoo

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


def _load_model(spec: str) -> ModelGraph:
    if spec.startswith("zoo:"):
        name = spec[4:]
        try:
            return zoo.ZOO[name]()
        except KeyError:
            raise InputError(f"unknown built-in model {name!r}; available: "
                             + ", ".join(sorted(zoo.ZOO))) from None
    path = Path(spec)
    if path.suffix.lower() == ".onnx":
        return import_onnx(path.read_bytes(), name=path.stem)
    return parse_model(path.read_text())


def _load_acts(args) -> ActivationCostTable:
    if getattr(args, "act_costs", None):
        return ActivationCostTable.from_file(args.act_costs)
    return DEFAULT_ACTS


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _workload(args):
    graph = _load_model(args.model)
    precision = Precision.parse(args.precision) if args.precision else None
    mode = CostMode.Training if getattr(args, "train", False) else CostMode.Inference
    shaped = infer_shapes(graph, args.batch)
    cost = aggregate_workload(shaped, mode, precision, _load_acts(args))
    return graph, cost


def cmd_analyze(args) -> int:
    graph, cost = _workload(args)
    target = load_device_config(args.device) if args.device else None
    _write(emit_report(cost, target, args.format, graph), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    graph, cost = _workload(args)
    catalog = load_catalog(args.catalog)
    _write(emit_report(cost, catalog, args.format, graph), args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    graph, cost = _workload(args)
    catalog = load_catalog(args.catalog)
    budget_s = args.budget / 1e3 if args.budget is not None else None
    mode, row = recommend_mode(catalog, cost.total, budget_s, args.objective)
    doc = {
        "schema": "roofkit-recommendation/1",
        "model": graph.name,
        "objective": args.objective,
        "budget_ms": args.budget,
        "mode": mode.key(),
        "time_s": float(sig(row.time.seconds)),
        "energy_j": float(sig(row.energy.joules)),
        "time_class": row.classes.time_class.value,
        "energy_class": row.classes.energy_class.value,
        "crossover": row.classes.crossover,
    }
    if args.format == "json":
        _write(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        lines = [f"{k}: {v}" for k, v in doc.items() if k != "schema"]
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_batch_sweep(args) -> int:
    graph = _load_model(args.model)
    precision = Precision.parse(args.precision) if args.precision else None
    mode = CostMode.Training if args.train else CostMode.Inference
    try:
        batches = [int(b) for b in args.batches.split(",") if b]
    except ValueError:
        raise InputError(f"--batches must be a comma-separated integer list, "
                         f"got {args.batches!r}") from None
    sweep = batch_ai_sweep(graph, batches, mode, precision, _load_acts(args))
    doc = {
        "schema": "roofkit-batch-sweep/1",
        "model": graph.name,
        "ai_limit": float(sig(sweep.ai_limit)),
        "weight_fraction": float(sig(sweep.weight_fraction)),
        "rows": [{"batch": r.batch, "ai": float(sig(r.ai)), "flop": r.flop,
                  "bytes": r.mop} for r in sweep.rows],
    }
    if args.format == "json":
        _write(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        lines = [f"# model={graph.name} ai_limit={sig(sweep.ai_limit)} "
                 f"weight_fraction={sig(sweep.weight_fraction)}",
                 "batch,AI,W_flop,Q_bytes"]
        for r in sweep.rows:
            lines.append(f"{r.batch},{sig(r.ai)},{sig(r.flop)},{sig(r.mop)}")
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_roofline(args) -> int:
    rooflines = tuple(load_device_config(p) for p in args.device)
    if args.no_static:
        variant = PlotVariant.EnergyNoStatic
    elif args.energy:
        variant = PlotVariant.Energy
    else:
        variant = PlotVariant.Time
    spec = PlotSpec(rooflines=rooflines, variant=variant,
                    title=rooflines[0].device or rooflines[0].mode.key())
    svg = render_roofline_svg(spec)
    Path(args.svg).write_text(svg)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    mode = PowerMode.from_key(args.mode)
    csv_path = Path(args.measurements) / f"{args.mode}.csv"
    samples = read_measurements_file(csv_path)
    precision = Precision.parse(args.precision) if args.precision else Precision.FP32
    roof = calibrate_measurements(samples, mode, precision, device=args.device_name)
    save_device_config(roof, args.output)
    return EXIT_OK


def _add_model_args(p, batch_default=None):
    p.add_argument("model", help="model file (.json IR or .onnx) or zoo:<name>")
    p.add_argument("--batch", type=int, default=batch_default,
                   help="batch size (default: the model's default batch)")
    p.add_argument("--precision", default=None, help="override precision (fp32/tf32/fp16/int8)")
    p.add_argument("--train", action="store_true", help="cost training (adds backward pass)")
    p.add_argument("--act-costs", default=None, help="JSON file of activation FLOP costs")


def _add_output_args(p):
    p.add_argument("--format", choices=("csv", "md", "json"), default="md")
    p.add_argument("--out", default=None, help="write to file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="roofkit",
                                 description="Analytical time/energy roofline toolkit "
                                             "for DNN workloads")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="cost a model and predict time/energy on a device")
    _add_model_args(p)
    p.add_argument("--device", default=None, help="device config file (JSON/TOML)")
    _add_output_args(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("roofline", help="render a roofline SVG")
    p.add_argument("--device", action="append", required=True,
                   help="device config file; repeat to overlay modes")
    p.add_argument("--energy", action="store_true", help="energy roofline instead of time")
    p.add_argument("--no-static", action="store_true",
                   help="energy roofline with static power ignored")
    p.add_argument("--svg", required=True, help="output SVG path")
    p.set_defaults(fn=cmd_roofline)

    p = sub.add_parser("calibrate", help="fit a device config from measurement CSVs")
    p.add_argument("--measurements", required=True, help="directory of per-mode CSV files")
    p.add_argument("--mode", required=True,
                   help="power mode key, e.g. c8_cpu1651_gpu1300_mem3200")
    p.add_argument("-o", "--output", required=True, help="device config output path")
    p.add_argument("--precision", default=None)
    p.add_argument("--device-name", default="", help="device label for the config")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("sweep", help="predict a workload across a mode catalog")
    p.add_argument("--catalog", required=True, help="directory of device config files")
    p.add_argument("--model", required=True, dest="model")
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--precision", default=None)
    p.add_argument("--train", action="store_true")
    p.add_argument("--act-costs", default=None)
    _add_output_args(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("optimize", help="recommend a power mode for a workload")
    p.add_argument("--catalog", required=True)
    p.add_argument("--model", required=True, dest="model")
    p.add_argument("--budget", type=float, default=None, help="latency budget in ms")
    p.add_argument("--objective", choices=("min-energy", "min-time"), default="min-energy")
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--precision", default=None)
    p.add_argument("--train", action="store_true")
    p.add_argument("--act-costs", default=None)
    _add_output_args(p)
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("batch-sweep", help="AI versus batch size")
    p.add_argument("--model", required=True, dest="model")
    p.add_argument("--batches", required=True, help="comma-separated batch sizes")
    p.add_argument("--precision", default=None)
    p.add_argument("--train", action="store_true")
    p.add_argument("--act-costs", default=None)
    _add_output_args(p)
    p.set_defaults(fn=cmd_batch_sweep)

    return ap


def _style_error(msg: str) -> str:
    if os.environ.get("PAGODA_NO_COLOR") or not sys.stderr.isatty():
        return msg
    return f"\x1b[31m{msg}\x1b[0m"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InfeasibleBudget as e:
        print(_style_error(f"roofkit: {e}"), file=sys.stderr)
        return EXIT_INFEASIBLE
    except InputError as e:
        print(_style_error(f"roofkit: {e}"), file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(_style_error(f"roofkit: {e}"), file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # invariant violation
        print(_style_error(f"roofkit: internal error: {type(e).__name__}: {e}"),
              file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
