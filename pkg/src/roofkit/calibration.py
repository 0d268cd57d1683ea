"""Fit roofline coefficients from microbenchmark measurement files.

Peaks come from median-over-runs, max-over-sizes aggregation of measured
throughput; static power is the median of idle samples; the per-op
energies are a non-negative least-squares fit of
E_i - pi0*T_i = eps_flop*W_i + eps_mop*Q_i with E_i = P_i*T_i.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from statistics import median

import numpy as np
from scipy.optimize import nnls

from .errors import MissingKind, NegativeEnergy, RankDeficient, SchemaError
from .ir import Precision
from .roofline import DeviceRoofline, PowerMode, Provenance


class SampleKind(Enum):
    Compute = "compute"
    Memory = "memory"
    Idle = "idle"
    Workload = "workload"


@dataclass(frozen=True)
class MeasurementSample:
    run_id: int
    kind: SampleKind
    size: int
    flop: int
    mop_bytes: int
    time_s: float
    power_w: float

    def __post_init__(self):
        if self.kind is not SampleKind.Idle and self.time_s <= 0:
            raise SchemaError(f"{self.kind.value} sample needs time_s > 0")
        if self.power_w < 0:
            raise SchemaError("power_w must be >= 0")
        if self.kind is SampleKind.Compute and self.flop <= 0:
            raise SchemaError("compute sample needs flop > 0")
        if self.kind is SampleKind.Memory and self.mop_bytes <= 0:
            raise SchemaError("memory sample needs mop_bytes > 0")

    @property
    def energy_j(self) -> float:
        return self.power_w * self.time_s


_CSV_HEADER = ["run_id", "kind", "size", "flop", "mop_bytes", "time_s", "power_w"]


def read_measurements(text: str, source: str = "<csv>") -> list[MeasurementSample]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    rows = list(reader)
    if not rows:
        raise SchemaError(f"{source}: empty measurement file")
    header = [h.strip() for h in rows[0]]
    if header != _CSV_HEADER:
        raise SchemaError(f"{source}: header must be exactly {','.join(_CSV_HEADER)}")
    samples = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(_CSV_HEADER):
            raise SchemaError(f"{source}:{i}: expected {len(_CSV_HEADER)} fields")
        try:
            kind = SampleKind(row[1].strip().lower())
        except ValueError:
            raise SchemaError(f"{source}:{i}: unknown sample kind {row[1]!r}") from None
        try:
            samples.append(MeasurementSample(
                run_id=int(row[0]), kind=kind, size=int(row[2]),
                flop=int(float(row[3])), mop_bytes=int(float(row[4])),
                time_s=float(row[5]), power_w=float(row[6])))
        except ValueError as e:
            raise SchemaError(f"{source}:{i}: {e}") from None
    return samples


def read_measurements_file(path) -> list[MeasurementSample]:
    p = Path(path)
    return read_measurements(p.read_text(), source=str(p))


def fit_peaks(samples: list[MeasurementSample]) -> tuple[float, float]:
    """(peak FLOP/s, peak bytes/s): per size the median throughput across
    runs, then the maximum across sizes."""

    def peak(kind: SampleKind, value) -> float:
        by_size: dict[int, list[float]] = {}
        for s in samples:
            if s.kind is kind:
                by_size.setdefault(s.size, []).append(value(s) / s.time_s)
        if not by_size:
            raise MissingKind(f"no {kind.value} samples in measurement set")
        return max(median(v) for _, v in sorted(by_size.items()))

    return (peak(SampleKind.Compute, lambda s: s.flop),
            peak(SampleKind.Memory, lambda s: s.mop_bytes))


def measure_static_power(samples: list[MeasurementSample]) -> float:
    idle = [s.power_w for s in samples if s.kind is SampleKind.Idle]
    if not idle:
        raise MissingKind("no idle samples in measurement set")
    return float(median(idle))


@dataclass(frozen=True)
class FitResult:
    eps_flop: float
    eps_mop: float
    residual_rms: float     # ||residual|| / ||target||, 0 for a perfect fit
    n_samples: int
    unidentifiable: tuple[str, ...] = ()


_FITTABLE = (SampleKind.Compute, SampleKind.Memory, SampleKind.Workload)


def fit_energy_coefficients(samples: list[MeasurementSample], static_power: float) -> FitResult:
    """Non-negative least squares for (eps_flop, eps_mop) over all
    compute/memory/workload samples."""
    if static_power < 0:
        raise SchemaError("static power must be >= 0")
    rows = [s for s in samples if s.kind in _FITTABLE]
    if len(rows) < 2:
        raise SchemaError(f"need at least 2 fittable samples, got {len(rows)}")
    a = np.array([[float(s.flop), float(s.mop_bytes)] for s in rows])
    y = np.array([s.energy_j - static_power * s.time_s for s in rows])
    negative = int(np.sum(y < 0))
    if negative * 2 > len(rows):
        raise NegativeEnergy(
            f"{negative} of {len(rows)} samples have energy below the static floor; "
            "the supplied static power looks too high")

    zero_cols = [i for i in range(2) if not a[:, i].any()]
    names = ("eps_flop", "eps_mop")
    if len(zero_cols) == 2:
        raise RankDeficient("all samples have zero FLOP and zero bytes")
    if zero_cols:
        keep = 1 - zero_cols[0]
        coef, rnorm = nnls(a[:, [keep]], y)
        solution = [0.0, 0.0]
        solution[keep] = float(coef[0])
        unident = (names[zero_cols[0]],)
    else:
        if np.linalg.matrix_rank(a) < 2:
            raise RankDeficient("FLOP and byte columns are collinear; vary the "
                                "compute/memory mix of the microbenchmarks")
        coef, rnorm = nnls(a, y)
        solution = [float(coef[0]), float(coef[1])]
        unident = ()
    ynorm = float(np.linalg.norm(y))
    residual_rms = float(rnorm) / ynorm if ynorm > 0 else 0.0
    return FitResult(eps_flop=solution[0], eps_mop=solution[1],
                     residual_rms=residual_rms, n_samples=len(rows),
                     unidentifiable=unident)


def build_device_roofline(peaks: tuple[float, float], static_power: float,
                          fit: FitResult, mode: PowerMode,
                          precision: Precision = Precision.FP32,
                          device: str = "") -> DeviceRoofline:
    peak_flops, peak_bw = peaks
    return DeviceRoofline(peak_flops=peak_flops, peak_bw=peak_bw,
                          eps_flop=fit.eps_flop, eps_mop=fit.eps_mop,
                          static_power=static_power, precision=precision,
                          mode=mode, provenance=Provenance.Fitted, device=device)


def calibrate_measurements(samples: list[MeasurementSample], mode: PowerMode,
                           precision: Precision = Precision.FP32,
                           device: str = "") -> DeviceRoofline:
    """Full pipeline over one power mode's measurement set."""
    peaks = fit_peaks(samples)
    pi0 = measure_static_power(samples)
    fit = fit_energy_coefficients(samples, pi0)
    return build_device_roofline(peaks, pi0, fit, mode, precision, device)
