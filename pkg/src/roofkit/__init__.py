"""Analytical time/energy roofline toolkit for DNN workloads."""

from .advisor import (DegradationEstimate, LayerProfile, LayerProfileEntry,
                      ModeCatalog, ModeSweep, count_crossover_modes, load_catalog,
                      predict_layerwise_degradation, read_layer_profile,
                      recommend_mode, sweep_modes)
from .calibration import (FitResult, MeasurementSample, SampleKind,
                          build_device_roofline, calibrate_measurements,
                          fit_energy_coefficients, fit_peaks, measure_static_power,
                          read_measurements, read_measurements_file)
from .cost import (ActivationCostTable, BatchSweep, CostBreakdown, CostMode,
                   WorkloadCost, aggregate_workload, arithmetic_intensity,
                   batch_ai_sweep, conv_backward_cost, conv_forward_cost, layer_cost)
from .ir import (LayerKind, LayerSpec, ModelGraph, Precision, TensorShape,
                 build_graph, parse_model, serialize, topological_order)
from .onnx_import import import_onnx
from .report import emit_report, layer_cost_csv, report_dict
from .roofline import (BalancePoints, Boundedness, DeviceRoofline, PowerMode,
                       Provenance, WorkloadPoint, attainable_performance,
                       balance_points, classify_workload, energy_balance_point,
                       energy_efficiency_bound, load_device_config,
                       peak_energy_efficiency, predict_energy, predict_runtime,
                       roofline_diagnostics, save_device_config, time_balance_point)
from .shapes import ShapedGraph, infer_shapes
from .svgplot import PlotSpec, PlotVariant, render_roofline_svg

__version__ = "0.1.0"
