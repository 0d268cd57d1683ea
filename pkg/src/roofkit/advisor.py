"""Power-mode sweeps and recommendations over a catalog of rooflines.

Every row of a sweep is computed directly from the roofline operations,
so sweep output never drifts from single-mode predictions. Layer-wise
degradation under a roofline shift is a coarse product estimate: peak
degradation times the runtime share of layers bound by that peak.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .cost import CostBreakdown, arithmetic_intensity
from .errors import EmptyCatalog, InfeasibleBudget, ProfileInvalid, SchemaError
from .roofline import (DeviceRoofline, EnergyPrediction, PowerMode,
                       TimePrediction, WorkloadClass, classify_workload,
                       energy_balance_point, load_device_config, predict_energy,
                       predict_runtime, roofline_diagnostics, time_balance_point)


@dataclass(frozen=True)
class ModeCatalog:
    rooflines: Mapping[PowerMode, DeviceRoofline]

    def __post_init__(self):
        if not self.rooflines:
            raise EmptyCatalog("mode catalog is empty")
        precisions = {d.precision for d in self.rooflines.values()}
        if len(precisions) > 1:
            raise SchemaError(f"catalog mixes precisions: "
                              f"{sorted(p.name for p in precisions)}")

    def __iter__(self):
        return iter(sorted(self.rooflines))

    def __len__(self):
        return len(self.rooflines)

    def __getitem__(self, mode: PowerMode) -> DeviceRoofline:
        return self.rooflines[mode]


def load_catalog(directory) -> ModeCatalog:
    """Read every device config file (*.json, *.toml) in a directory."""
    d = Path(directory)
    paths = sorted(list(d.glob("*.json")) + list(d.glob("*.toml")))
    rooflines = {}
    for p in paths:
        roof = load_device_config(p)
        if roof.mode in rooflines:
            raise SchemaError(f"{p}: duplicate power mode {roof.mode.key()}")
        rooflines[roof.mode] = roof
    if not rooflines:
        raise EmptyCatalog(f"no device config files found in {d}")
    return ModeCatalog(rooflines)


@dataclass(frozen=True)
class ModeRow:
    mode: PowerMode
    time: TimePrediction
    energy: EnergyPrediction
    beta_tau: float
    beta_eps: float
    classes: WorkloadClass


@dataclass(frozen=True)
class ModeSweep:
    rows: tuple[ModeRow, ...]
    beta_tau_min: float
    beta_tau_max: float

    def __iter__(self):
        return iter(self.rows)


def sweep_modes(catalog: ModeCatalog, cost: CostBreakdown) -> ModeSweep:
    """Predict time, energy and boundedness of one workload per mode."""
    ai = arithmetic_intensity(cost)
    rows = []
    for mode in catalog:
        roof = catalog[mode]
        rows.append(ModeRow(
            mode=mode,
            time=predict_runtime(roof, cost),
            energy=predict_energy(roof, cost),
            beta_tau=time_balance_point(roof),
            beta_eps=energy_balance_point(roof, include_static=True),
            classes=classify_workload(roof, ai),
        ))
    betas = [r.beta_tau for r in rows]
    return ModeSweep(rows=tuple(rows), beta_tau_min=min(betas), beta_tau_max=max(betas))


@dataclass(frozen=True)
class LayerProfileEntry:
    layer_id: str
    ai: float
    runtime_fraction: float


@dataclass(frozen=True)
class LayerProfile:
    entries: tuple[LayerProfileEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ProfileInvalid("layer profile is empty")
        for e in self.entries:
            if e.ai < 0 or not (0.0 <= e.runtime_fraction <= 1.0):
                raise ProfileInvalid(f"layer {e.layer_id!r}: ai must be >= 0 and "
                                     "runtime_fraction within [0, 1]")
        total = sum(e.runtime_fraction for e in self.entries)
        if abs(total - 1.0) > 1e-6:
            raise ProfileInvalid(f"runtime fractions sum to {total!r}, expected 1")


def read_layer_profile(text: str, source: str = "<csv>") -> LayerProfile:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    if not rows or [h.strip() for h in rows[0]] != ["layer_id", "ai", "runtime_fraction"]:
        raise SchemaError(f"{source}: header must be layer_id,ai,runtime_fraction")
    entries = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise SchemaError(f"{source}:{i}: expected 3 fields")
        try:
            entries.append(LayerProfileEntry(row[0], float(row[1]), float(row[2])))
        except ValueError as e:
            raise SchemaError(f"{source}:{i}: {e}") from None
    return LayerProfile(tuple(entries))


@dataclass(frozen=True)
class DegradationEstimate:
    """Coarse fractional runtime increase when shifting base -> target.

    This is a trend estimate, not a fine-grained predictor: observed
    degradations can differ by several percentage points in either
    direction.
    """

    compute_shift: float     # from the peak-FLOP/s drop, over compute-bound layers
    memory_shift: float      # from the peak-bandwidth drop, over memory-bound layers
    compute_bound_fraction: float
    memory_bound_fraction: float

    @property
    def total(self) -> float:
        return self.compute_shift + self.memory_shift


def predict_layerwise_degradation(profile: LayerProfile, base: DeviceRoofline,
                                  target: DeviceRoofline) -> DegradationEstimate:
    """Layers are classed against the unshifted (base) balance point, then
    each peak's degradation applies to the runtime share it bounds."""
    if base.precision is not target.precision:
        raise ProfileInvalid("base and target rooflines use different precisions")
    beta = time_balance_point(base)
    compute_frac = sum(e.runtime_fraction for e in profile.entries if e.ai >= beta)
    memory_frac = sum(e.runtime_fraction for e in profile.entries if e.ai < beta)
    flops_drop = max(0.0, 1.0 - target.peak_flops / base.peak_flops)
    bw_drop = max(0.0, 1.0 - target.peak_bw / base.peak_bw)
    return DegradationEstimate(
        compute_shift=flops_drop * compute_frac,
        memory_shift=bw_drop * memory_frac,
        compute_bound_fraction=compute_frac,
        memory_bound_fraction=memory_frac,
    )


def count_crossover_modes(catalog: ModeCatalog) -> int:
    """How many catalog modes would, with static power ignored, require
    energy efficiency before time efficiency (energy balance right of the
    time balance)."""
    return sum(1 for m in catalog if roofline_diagnostics(catalog[m]).crossover_regime)


def recommend_mode(catalog: ModeCatalog, cost: CostBreakdown,
                   latency_budget_s: float | None = None,
                   objective: str = "min-energy") -> tuple[PowerMode, ModeRow]:
    """Pick the best mode for the workload.

    min-energy: least predicted energy among modes meeting the budget;
    min-time: least predicted time. Ties break on the lexicographically
    smallest mode key.
    """
    if objective not in ("min-energy", "min-time"):
        raise SchemaError(f"unknown objective {objective!r}")
    sweep = sweep_modes(catalog, cost)
    rows = list(sweep.rows)
    if latency_budget_s is not None:
        feasible = [r for r in rows if r.time.seconds <= latency_budget_s]
        if not feasible:
            raise InfeasibleBudget(min(r.time.seconds for r in rows))
        rows = feasible
    if objective == "min-energy":
        best = min(rows, key=lambda r: (r.energy.joules, r.mode))
    else:
        best = min(rows, key=lambda r: (r.time.seconds, r.mode))
    return best.mode, best
