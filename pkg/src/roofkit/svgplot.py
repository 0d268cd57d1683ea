"""Deterministic log-log roofline plots as standalone SVG documents.

The renderer is plain string assembly: identical inputs produce
byte-identical output. Machine-checkable values (balance points, peaks,
point coordinates) are embedded as data-* attributes alongside the
drawn geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptySpec, SchemaError
from .roofline import (DeviceRoofline, WorkloadPoint, energy_balance_point,
                       energy_efficiency_bound, peak_energy_efficiency,
                       time_balance_point)


class PlotVariant(Enum):
    Time = "time"
    Energy = "energy"
    EnergyNoStatic = "energy-no-static"


@dataclass(frozen=True)
class PlotSpec:
    rooflines: tuple[DeviceRoofline, ...]
    points: tuple[WorkloadPoint, ...] = ()
    variant: PlotVariant = PlotVariant.Time
    ai_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    annotations: bool = True
    title: str = ""

    def __post_init__(self):
        if not self.rooflines:
            raise EmptySpec("plot needs at least one roofline")
        for rng in (self.ai_range, self.y_range):
            if rng is not None and not (0 < rng[0] < rng[1]):
                raise SchemaError(f"axis range must be positive and increasing, got {rng}")


_WIDTH, _HEIGHT = 860, 540
_ML, _MR, _MT, _MB = 80, 24, 40, 56
_PALETTE = ("#1f6fb2", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e")
_CURVE_SAMPLES = 384


def _fmt(x: float) -> str:
    return format(x, ".6g")


def _auto_ai_range(spec: PlotSpec) -> tuple[float, float]:
    betas = [time_balance_point(r) for r in spec.rooflines]
    point_ais = [p.ai for p in spec.points if p.ai > 0]
    lo = min(point_ais) / 10 if point_ais else min(betas) / 100
    hi = max(10 * max(betas), max(point_ais) * 10 if point_ais else 0)
    return lo, hi


def _auto_y_range(spec: PlotSpec, ai_lo: float, ai_hi: float) -> tuple[float, float]:
    vals = []
    for r in spec.rooflines:
        if spec.variant is PlotVariant.Time:
            vals += [ai_lo * r.peak_bw, r.peak_flops]
        else:
            include = spec.variant is PlotVariant.Energy
            vals += [energy_efficiency_bound(r, ai_lo, include),
                     peak_energy_efficiency(r, include)]
    if spec.variant is PlotVariant.Time:
        vals += [p.achieved_perf for p in spec.points if p.achieved_perf > 0]
    else:
        vals += [p.achieved_eff for p in spec.points if p.achieved_eff > 0]
    lo, hi = min(vals), max(vals)
    return lo / 2, hi * 2


def _decades(lo: float, hi: float) -> list[int]:
    return list(range(math.ceil(math.log10(lo) - 1e-12), math.floor(math.log10(hi) + 1e-12) + 1))


def _si_label(exp: int) -> str:
    return f"1e{exp}"


def render_roofline_svg(spec: PlotSpec) -> str:
    """Render the plot; returns the SVG document as a string."""
    ai_lo, ai_hi = spec.ai_range or _auto_ai_range(spec)
    y_lo, y_hi = spec.y_range or _auto_y_range(spec, ai_lo, ai_hi)
    lx0, lx1 = math.log10(ai_lo), math.log10(ai_hi)
    ly0, ly1 = math.log10(y_lo), math.log10(y_hi)
    px0, px1 = _ML, _WIDTH - _MR
    py0, py1 = _HEIGHT - _MB, _MT

    def xp(ai: float) -> float:
        return px0 + (math.log10(ai) - lx0) / (lx1 - lx0) * (px1 - px0)

    def yp(v: float) -> float:
        return py0 + (math.log10(v) - ly0) / (ly1 - ly0) * (py1 - py0)

    ylabel = ("attainable FLOP/s" if spec.variant is PlotVariant.Time
              else "attainable FLOP/J")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" data-variant="{spec.variant.value}" '
        f'data-ai-min="{_fmt(ai_lo)}" data-ai-max="{_fmt(ai_hi)}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    if spec.title:
        parts.append(f'<text x="{(px0 + px1) / 2:.1f}" y="24" text-anchor="middle" '
                     f'font-family="monospace" font-size="14">{_esc(spec.title)}</text>')

    # decade grid and tick labels
    for ex in _decades(ai_lo, ai_hi):
        x = xp(10.0 ** ex)
        parts.append(f'<line x1="{x:.2f}" y1="{py1}" x2="{x:.2f}" y2="{py0}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{x:.2f}" y="{py0 + 18}" text-anchor="middle" '
                     f'font-family="monospace" font-size="11">{_si_label(ex)}</text>')
    for ex in _decades(y_lo, y_hi):
        y = yp(10.0 ** ex)
        parts.append(f'<line x1="{px0}" y1="{y:.2f}" x2="{px1}" y2="{y:.2f}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{px0 - 6}" y="{y + 4:.2f}" text-anchor="end" '
                     f'font-family="monospace" font-size="11">{_si_label(ex)}</text>')
    parts.append(f'<rect x="{px0}" y="{py1}" width="{px1 - px0}" height="{py0 - py1}" '
                 f'fill="none" stroke="#333333" stroke-width="1"/>')
    parts.append(f'<text x="{(px0 + px1) / 2:.1f}" y="{_HEIGHT - 14}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12">arithmetic intensity (FLOP/byte)</text>')
    parts.append(f'<text x="20" y="{(py0 + py1) / 2:.1f}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12" '
                 f'transform="rotate(-90 20 {(py0 + py1) / 2:.1f})">{ylabel}</text>')

    for idx, roof in enumerate(spec.rooflines):
        color = _PALETTE[idx % len(_PALETTE)]
        name = roof.device or roof.mode.key()
        beta_t = time_balance_point(roof)
        if spec.variant is PlotVariant.Time:
            pts = []
            kink_inside = ai_lo < beta_t < ai_hi
            xs = [ai_lo] + ([beta_t] if kink_inside else []) + [ai_hi]
            for ai in xs:
                v = min(roof.peak_flops, ai * roof.peak_bw)
                pts.append(f"{xp(ai):.2f},{yp(_clamp(v, y_lo, y_hi)):.2f}")
            parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
                f'stroke-width="2" data-roofline="{_esc(name)}" '
                f'data-balance-ai="{_fmt(beta_t)}" data-peak-flops="{_fmt(roof.peak_flops)}" '
                f'data-peak-bw="{_fmt(roof.peak_bw)}"/>')
            beta_marker = beta_t
        else:
            include = spec.variant is PlotVariant.Energy
            pts = []
            for i in range(_CURVE_SAMPLES):
                ai = 10.0 ** (lx0 + (lx1 - lx0) * i / (_CURVE_SAMPLES - 1))
                v = energy_efficiency_bound(roof, ai, include_static=include)
                pts.append(f"{xp(ai):.2f},{yp(_clamp(v, y_lo, y_hi)):.2f}")
            beta_marker = energy_balance_point(roof, include_static=include)
            parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
                f'stroke-width="2" data-roofline="{_esc(name)}" '
                f'data-balance-ai="{_fmt(beta_marker)}" '
                f'data-peak-eff="{_fmt(peak_energy_efficiency(roof, include))}" '
                f'data-samples="{_CURVE_SAMPLES}"/>')
        if spec.annotations and ai_lo < beta_marker < ai_hi:
            x = xp(beta_marker)
            parts.append(f'<line x1="{x:.2f}" y1="{py1}" x2="{x:.2f}" y2="{py0}" '
                         f'stroke="{color}" stroke-width="1" stroke-dasharray="4 3" '
                         f'data-balance-marker="{_fmt(beta_marker)}"/>')
        parts.append(f'<text x="{px1 - 8}" y="{py1 + 16 + 14 * idx}" text-anchor="end" '
                     f'font-family="monospace" font-size="11" fill="{color}">{_esc(name)}</text>')

    for p in spec.points:
        y_val = p.achieved_perf if spec.variant is PlotVariant.Time else p.achieved_eff
        if not (ai_lo <= p.ai <= ai_hi) or y_val <= 0 or not (y_lo <= y_val <= y_hi):
            continue
        parts.append(f'<circle cx="{xp(p.ai):.2f}" cy="{yp(y_val):.2f}" r="4" '
                     f'fill="#222222" data-point="{_esc(p.label)}" '
                     f'data-ai="{_fmt(p.ai)}" data-y="{_fmt(y_val)}"/>')
        if p.label:
            parts.append(f'<text x="{xp(p.ai) + 6:.2f}" y="{yp(y_val) - 6:.2f}" '
                         f'font-family="monospace" font-size="10">{_esc(p.label)}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def _esc(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))
