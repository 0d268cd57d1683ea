"""Synthetic measurement generators: ground-truth coefficients in,
measurement CSV rows out."""

from __future__ import annotations

import numpy as np


def synth_measurement_csv(rng: np.random.Generator, peak_flops: float, peak_bw: float,
                          eps_flop: float, eps_mop: float, static_power: float,
                          runs: int = 10, sizes=(256, 512, 1024, 2048, 4096),
                          throughput_noise: float = 0.0, power_noise: float = 0.0,
                          n_workload: int = 20) -> str:
    """CSV text whose peaks, idle power and energy coefficients equal the
    given ground truth up to the requested noise."""
    lines = ["# synthetic microbenchmark measurements",
             "run_id,kind,size,flop,mop_bytes,time_s,power_w"]

    def power(flop, mop, t):
        p = (eps_flop * flop + eps_mop * mop) / t + static_power
        if power_noise:
            p *= 1.0 + power_noise * rng.standard_normal()
        return max(p, 0.0)

    n_sizes = len(sizes)
    for run in range(runs):
        for i, size in enumerate(sizes):
            # efficiency rises with size; the largest size runs at peak
            eff = 0.6 + 0.4 * i / (n_sizes - 1) if n_sizes > 1 else 1.0
            # matrix-multiply-shaped compute sample
            flop = 2 * size ** 3
            mop = 3 * size * size * 4
            tp = peak_flops * eff
            if throughput_noise:
                tp *= 1.0 + throughput_noise * rng.uniform(-1.0, 1.0)
            t = flop / tp
            lines.append(f"{run},compute,{size},{flop},{mop},{t!r},{power(flop, mop, t)!r}")
            # streaming memory sample
            mop = 2 * size * size * 4
            flop_m = size * size
            bw = peak_bw * eff
            if throughput_noise:
                bw *= 1.0 + throughput_noise * rng.uniform(-1.0, 1.0)
            t = mop / bw
            lines.append(f"{run},memory,{size},{flop_m},{mop},{t!r},{power(flop_m, mop, t)!r}")
        idle_p = static_power * (1.0 + power_noise * rng.standard_normal()) \
            if power_noise else static_power
        lines.append(f"{run},idle,0,0,0,1.0,{max(idle_p, 0.0)!r}")

    # mixed workload points spanning intensities, for the regression
    for i in range(n_workload):
        flop = int(rng.integers(1, 200)) * 10 ** 9
        mop = int(rng.integers(1, 200)) * 10 ** 8
        t = max(flop / peak_flops, mop / peak_bw) * float(rng.uniform(1.0, 3.0))
        lines.append(f"{i},workload,0,{flop},{mop},{t!r},{power(flop, mop, t)!r}")
    return "\n".join(lines) + "\n"


def synth_fit_samples(rng: np.random.Generator, eps_flop: float, eps_mop: float,
                      static_power: float, n: int = 50, power_noise: float = 0.0):
    """Bare (flop, mop, time, power) rows for regression tests."""
    rows = []
    for _ in range(n):
        flop = int(rng.integers(10 ** 9, 10 ** 12))
        mop = int(rng.integers(10 ** 8, 10 ** 11))
        t = float(rng.uniform(0.01, 2.0))
        p = (eps_flop * flop + eps_mop * mop) / t + static_power
        if power_noise:
            p *= 1.0 + power_noise * rng.standard_normal()
        rows.append((flop, mop, t, max(p, 0.0)))
    return rows
