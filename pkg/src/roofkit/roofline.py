"""Time and energy rooflines for one device power mode.

The time roofline bounds attainable FLOP/s by min(peak compute,
AI * peak bandwidth). The energy roofline bounds attainable FLOP/J by a
hyperbolic arch in AI derived from per-operation energies and static
power; with static power the arch changes shape at the time balance
point because runtime switches between the memory- and compute-bound
expressions.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .cost import CostBreakdown
from .errors import (DegenerateCoefficients, EmptyWorkload, NegativeAI,
                     NonPositiveAI, SchemaError)
from .ir import Precision

_REL_TOL = 1e-9  # balance classification tolerance


@dataclass(frozen=True, order=True)
class PowerMode:
    """Device knob tuple; also the catalog key and file-name stem."""

    cpu_cores: int = 0
    cpu_mhz: int = 0
    gpu_mhz: int = 0
    mem_mhz: int = 0

    def key(self) -> str:
        return f"c{self.cpu_cores}_cpu{self.cpu_mhz}_gpu{self.gpu_mhz}_mem{self.mem_mhz}"

    @classmethod
    def from_key(cls, key: str) -> "PowerMode":
        m = re.fullmatch(r"c(\d+)_cpu(\d+)_gpu(\d+)_mem(\d+)", key)
        if not m:
            raise SchemaError(f"power mode key {key!r} is not of the form "
                              "c<cores>_cpu<mhz>_gpu<mhz>_mem<mhz>")
        return cls(*(int(g) for g in m.groups()))


class Provenance(Enum):
    Configured = "configured"
    Fitted = "fitted"


class Boundedness(Enum):
    MemoryBound = "memory-bound"
    ComputeBound = "compute-bound"
    Balanced = "balanced"


@dataclass(frozen=True)
class DeviceRoofline:
    """Roofline coefficients of one power mode, in SI units."""

    peak_flops: float           # FLOP/s
    peak_bw: float              # bytes/s
    eps_flop: float             # J/FLOP
    eps_mop: float              # J/byte
    static_power: float         # W
    precision: Precision = Precision.FP32
    mode: PowerMode = PowerMode()
    provenance: Provenance = Provenance.Configured
    device: str = ""

    def __post_init__(self):
        if not (self.peak_flops > 0 and self.peak_bw > 0):
            raise SchemaError("peak compute and bandwidth must be positive")
        if self.eps_flop < 0 or self.eps_mop < 0 or self.static_power < 0:
            raise SchemaError("energy coefficients and static power must be non-negative")

    @property
    def tau_flop(self) -> float:
        return 1.0 / self.peak_flops

    @property
    def tau_mop(self) -> float:
        return 1.0 / self.peak_bw


@dataclass(frozen=True)
class BalancePoints:
    beta_tau: float        # FLOP/byte where compute and memory time match
    beta_eps: float        # FLOP/byte where compute and memory energy match
    beta_eps_zero: float   # same with static power treated as zero


@dataclass(frozen=True)
class WorkloadPoint:
    """A measured workload overlaid on a roofline plot."""

    ai: float
    achieved_perf: float = 0.0   # FLOP/s, W / measured T
    achieved_eff: float = 0.0    # FLOP/J, W / measured E
    label: str = ""

    def __post_init__(self):
        if self.ai < 0 or self.achieved_perf < 0 or self.achieved_eff < 0:
            raise SchemaError("workload point values must be non-negative")


def time_balance_point(d: DeviceRoofline) -> float:
    return d.peak_flops / d.peak_bw


def attainable_performance(d: DeviceRoofline, ai: float) -> float:
    """Roofline bound on FLOP/s at the given arithmetic intensity."""
    if ai < 0:
        raise NegativeAI(f"arithmetic intensity must be >= 0, got {ai}")
    return min(d.peak_flops, ai * d.peak_bw)


def energy_balance_point(d: DeviceRoofline, include_static: bool = True) -> float:
    if include_static:
        denom = d.eps_flop + 2.0 * d.static_power / d.peak_flops
        if denom == 0:
            raise DegenerateCoefficients("energy balance undefined: zero energy per FLOP "
                                         "and zero static power")
        return (d.eps_mop + d.static_power / d.peak_bw) / denom
    if d.eps_flop == 0:
        raise DegenerateCoefficients("energy balance undefined: zero energy per FLOP")
    return d.eps_mop / d.eps_flop


def balance_points(d: DeviceRoofline) -> BalancePoints:
    return BalancePoints(beta_tau=time_balance_point(d),
                         beta_eps=energy_balance_point(d, include_static=True),
                         beta_eps_zero=energy_balance_point(d, include_static=False))


def peak_energy_efficiency(d: DeviceRoofline, include_static: bool = True) -> float:
    """Large-AI limit of attainable FLOP/J."""
    denom = d.eps_flop + (d.static_power / d.peak_flops if include_static else 0.0)
    if denom == 0:
        raise DegenerateCoefficients("peak energy efficiency undefined: zero energy "
                                     "per FLOP and zero static power")
    return 1.0 / denom


def energy_efficiency_bound(d: DeviceRoofline, ai: float,
                            include_static: bool = True) -> float:
    """Attainable FLOP/J at the given arithmetic intensity.

    With static power the bound uses the roofline runtime, so the
    expression switches at the time balance point; both branches agree
    there exactly.
    """
    if ai <= 0:
        raise NonPositiveAI(f"arithmetic intensity must be > 0, got {ai}")
    if not include_static:
        denom = d.eps_flop + d.eps_mop / ai
    elif ai < time_balance_point(d):
        denom = d.eps_flop + (d.eps_mop + d.static_power / d.peak_bw) / ai
    else:
        denom = d.eps_flop + d.eps_mop / ai + d.static_power / d.peak_flops
    if denom == 0:
        raise DegenerateCoefficients("energy efficiency unbounded: all coefficients zero")
    return 1.0 / denom


@dataclass(frozen=True)
class TimePrediction:
    seconds: float
    boundedness: Boundedness
    t_flop: float
    t_mop: float


def predict_runtime(d: DeviceRoofline, c: CostBreakdown) -> TimePrediction:
    """Roofline-optimal runtime: compute and memory fully overlapped."""
    if c.flop == 0 and c.mop == 0:
        raise EmptyWorkload("workload has zero FLOP and zero bytes")
    t_flop = c.flop / d.peak_flops
    t_mop = c.mop / d.peak_bw
    if math.isclose(t_flop, t_mop, rel_tol=_REL_TOL):
        bound = Boundedness.Balanced
    elif t_flop > t_mop:
        bound = Boundedness.ComputeBound
    else:
        bound = Boundedness.MemoryBound
    return TimePrediction(seconds=max(t_flop, t_mop), boundedness=bound,
                          t_flop=t_flop, t_mop=t_mop)


@dataclass(frozen=True)
class EnergyPrediction:
    joules: float
    flop_j: float
    mop_j: float
    static_j: float
    time: TimePrediction


def predict_energy(d: DeviceRoofline, c: CostBreakdown) -> EnergyPrediction:
    """Lower-bound energy: per-op energies plus static power over the
    roofline-optimal runtime."""
    t = predict_runtime(d, c)
    flop_j = d.eps_flop * c.flop
    mop_j = d.eps_mop * c.mop
    static_j = d.static_power * t.seconds
    return EnergyPrediction(joules=flop_j + mop_j + static_j,
                            flop_j=flop_j, mop_j=mop_j, static_j=static_j, time=t)


def _classify(ai: float, beta: float) -> Boundedness:
    if math.isclose(ai, beta, rel_tol=_REL_TOL):
        return Boundedness.Balanced
    return Boundedness.ComputeBound if ai > beta else Boundedness.MemoryBound


@dataclass(frozen=True)
class WorkloadClass:
    time_class: Boundedness
    energy_class: Boundedness
    crossover: bool


def classify_workload(d: DeviceRoofline, ai: float) -> WorkloadClass:
    """Boundedness against the time and (static-inclusive) energy balance
    points; crossover marks compute-bound energy with memory-bound time."""
    if ai <= 0:
        raise NonPositiveAI(f"arithmetic intensity must be > 0, got {ai}")
    time_class = _classify(ai, time_balance_point(d))
    energy_class = _classify(ai, energy_balance_point(d, include_static=True))
    crossover = (energy_class is Boundedness.ComputeBound
                 and time_class is Boundedness.MemoryBound)
    return WorkloadClass(time_class=time_class, energy_class=energy_class,
                         crossover=crossover)


@dataclass(frozen=True)
class RooflineDiagnostics:
    beta_tau: float
    beta_eps_static: float
    beta_eps_nostatic: float
    race_to_halt: bool
    crossover_regime: bool


def roofline_diagnostics(d: DeviceRoofline) -> RooflineDiagnostics:
    """Mode-level relationships between the time and energy balance points.

    race_to_halt: every time-efficient workload is also energy-efficient.
    crossover_regime: with static power ignored, energy efficiency would
    imply time efficiency instead.
    """
    bt = time_balance_point(d)
    be = energy_balance_point(d, include_static=True)
    be0 = energy_balance_point(d, include_static=False)
    return RooflineDiagnostics(beta_tau=bt, beta_eps_static=be, beta_eps_nostatic=be0,
                               race_to_halt=be <= bt, crossover_regime=be0 > bt)


# --- device config files ---

_CONFIG_KEYS = {"device", "mode", "precision", "peak_tflops", "peak_gbps",
                "eps_flop_pj", "eps_mop_pj", "static_w", "provenance"}
_MODE_KEYS = {"cpu_cores", "cpu_mhz", "gpu_mhz", "mem_mhz"}


def roofline_from_config(doc: dict, source: str = "<config>") -> DeviceRoofline:
    if not isinstance(doc, dict):
        raise SchemaError(f"{source}: device config must be an object/table")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise SchemaError(f"{source}: unknown config key(s): {sorted(unknown)}")
    missing = _CONFIG_KEYS - {"provenance", "device"} - set(doc)
    if missing:
        raise SchemaError(f"{source}: missing config key(s): {sorted(missing)}")
    mode_doc = doc["mode"]
    if not isinstance(mode_doc, dict) or set(mode_doc) != _MODE_KEYS:
        raise SchemaError(f"{source}: 'mode' must contain exactly {sorted(_MODE_KEYS)}")
    try:
        mode = PowerMode(**{k: int(mode_doc[k]) for k in sorted(_MODE_KEYS)})
        roof = DeviceRoofline(
            peak_flops=float(doc["peak_tflops"]) * 1e12,
            peak_bw=float(doc["peak_gbps"]) * 1e9,
            eps_flop=float(doc["eps_flop_pj"]) * 1e-12,
            eps_mop=float(doc["eps_mop_pj"]) * 1e-12,
            static_power=float(doc["static_w"]),
            precision=Precision.parse(doc["precision"]),
            mode=mode,
            provenance=Provenance(doc.get("provenance", "configured")),
            device=str(doc.get("device", "")),
        )
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{source}: {e}") from None
    return roof


def config_from_roofline(d: DeviceRoofline) -> dict:
    return {
        "device": d.device,
        "mode": {"cpu_cores": d.mode.cpu_cores, "cpu_mhz": d.mode.cpu_mhz,
                 "gpu_mhz": d.mode.gpu_mhz, "mem_mhz": d.mode.mem_mhz},
        "precision": d.precision.name,
        "peak_tflops": d.peak_flops / 1e12,
        "peak_gbps": d.peak_bw / 1e9,
        "eps_flop_pj": d.eps_flop * 1e12,
        "eps_mop_pj": d.eps_mop * 1e12,
        "static_w": d.static_power,
        "provenance": d.provenance.value,
    }


def load_device_config(path) -> DeviceRoofline:
    """Read a device config file; .toml parses as TOML, anything else as JSON."""
    p = Path(path)
    data = p.read_bytes()
    if p.suffix.lower() == ".toml":
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            doc = tomllib.loads(data.decode("utf-8"))
        except Exception as e:
            raise SchemaError(f"{p}: invalid TOML: {e}") from None
    else:
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{p}: invalid JSON: {e}") from None
    return roofline_from_config(doc, source=str(p))


def save_device_config(d: DeviceRoofline, path) -> None:
    Path(path).write_text(json.dumps(config_from_roofline(d), indent=2) + "\n")
