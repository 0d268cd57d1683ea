import numpy as np
import pytest

from datagen import synth_fit_samples, synth_measurement_csv
from roofkit.calibration import (MeasurementSample, SampleKind, calibrate_measurements,
                                 fit_energy_coefficients, fit_peaks,
                                 measure_static_power, read_measurements)
from roofkit.errors import (MissingKind, NegativeEnergy, RankDeficient, SchemaError)
from roofkit.ir import Precision
from roofkit.roofline import PowerMode, Provenance

GT = dict(peak_flops=14.7e12, peak_bw=164.4e9, eps_flop=3.86e-12,
          eps_mop=141.38e-12, static_power=17.9)


def sample(kind, run_id=0, size=1, flop=0, mop=0, t=1.0, p=10.0):
    return MeasurementSample(run_id=run_id, kind=kind, size=size, flop=flop,
                             mop_bytes=mop, time_s=t, power_w=p)


def compute(run_id, size, throughput, mop=0):
    flop = 10 ** 9
    return sample(SampleKind.Compute, run_id, size, flop=flop, mop=mop,
                  t=flop / throughput)


def memory(run_id, size, throughput):
    mop = 10 ** 9
    return sample(SampleKind.Memory, run_id, size, flop=0, mop=mop, t=mop / throughput)


def test_fit_peaks_median_of_runs():
    samples = [compute(r, 1, tp) for r, tp in enumerate([10.0, 14.0, 12.0])]
    samples += [memory(0, 1, 5.0)]
    peak_flops, peak_bw = fit_peaks(samples)
    assert peak_flops == pytest.approx(12.0)
    assert peak_bw == pytest.approx(5.0)


def test_fit_peaks_max_over_sizes():
    samples = [compute(r, 1, tp) for r, tp in enumerate([11.0, 12.0, 13.0])]
    samples += [compute(r, 2, tp) for r, tp in enumerate([14.0, 15.0, 16.0])]
    samples += [memory(0, 1, 7.0)]
    peak_flops, _ = fit_peaks(samples)
    assert peak_flops == pytest.approx(15.0)


def test_fit_peaks_missing_kind():
    with pytest.raises(MissingKind):
        fit_peaks([compute(0, 1, 10.0)])
    with pytest.raises(MissingKind):
        fit_peaks([memory(0, 1, 10.0)])


def test_fit_peaks_permutation_and_scale_invariance():
    samples = ([compute(r, s, 10.0 + r + s) for r in range(3) for s in (1, 2)]
               + [memory(r, s, 4.0 + r) for r in range(3) for s in (1, 2)])
    base = fit_peaks(samples)
    assert fit_peaks(list(reversed(samples))) == base
    scaled = [MeasurementSample(s.run_id, s.kind, s.size, s.flop * 3, s.mop_bytes * 3,
                                s.time_s * 3, s.power_w) for s in samples]
    got = fit_peaks(scaled)
    assert got[0] == pytest.approx(base[0])
    assert got[1] == pytest.approx(base[1])


def test_static_power_median():
    idle = [sample(SampleKind.Idle, p=p, t=1.0) for p in (17.8, 17.9, 18.0)]
    assert measure_static_power(idle) == pytest.approx(17.9)
    assert measure_static_power([sample(SampleKind.Idle, p=17.9)]) == pytest.approx(17.9)
    with pytest.raises(MissingKind):
        measure_static_power([compute(0, 1, 10.0)])


def test_static_power_robust_to_outlier():
    idle = [sample(SampleKind.Idle, p=p) for p in (17.8, 17.9, 18.0, 17.9, 500.0)]
    assert measure_static_power(idle) == pytest.approx(17.9)


def test_fit_exact_recovery_two_samples():
    eps_f, eps_m, pi0 = 2e-12, 100e-12, 10.0
    rows = [(10 ** 12, 10 ** 9, 0.5), (10 ** 11, 10 ** 10, 0.25)]
    samples = [sample(SampleKind.Workload, flop=w, mop=q, t=t,
                      p=(eps_f * w + eps_m * q) / t + pi0) for w, q, t in rows]
    fit = fit_energy_coefficients(samples, pi0)
    assert fit.eps_flop == pytest.approx(eps_f, rel=1e-9)
    assert fit.eps_mop == pytest.approx(eps_m, rel=1e-9)
    assert fit.residual_rms < 1e-9
    assert fit.unidentifiable == ()


def test_fit_noiseless_recovery_many_samples():
    rng = np.random.default_rng(3)
    rows = synth_fit_samples(rng, GT["eps_flop"], GT["eps_mop"], GT["static_power"], n=40)
    samples = [sample(SampleKind.Workload, flop=w, mop=q, t=t, p=p) for w, q, t, p in rows]
    fit = fit_energy_coefficients(samples, GT["static_power"])
    assert fit.eps_flop == pytest.approx(GT["eps_flop"], rel=1e-9)
    assert fit.eps_mop == pytest.approx(GT["eps_mop"], rel=1e-9)


def test_fit_noisy_recovery_median_error():
    errors = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        rows = synth_fit_samples(rng, GT["eps_flop"], GT["eps_mop"],
                                 GT["static_power"], n=50, power_noise=0.01)
        samples = [sample(SampleKind.Workload, flop=w, mop=q, t=t, p=p)
                   for w, q, t, p in rows]
        fit = fit_energy_coefficients(samples, GT["static_power"])
        errors.append(max(abs(fit.eps_flop - GT["eps_flop"]) / GT["eps_flop"],
                          abs(fit.eps_mop - GT["eps_mop"]) / GT["eps_mop"]))
    assert float(np.median(errors)) < 0.05


def test_fit_more_samples_reduce_error():
    def median_err(n):
        errs = []
        for seed in range(60):
            rng = np.random.default_rng(seed + 1000)
            rows = synth_fit_samples(rng, GT["eps_flop"], GT["eps_mop"],
                                     GT["static_power"], n=n, power_noise=0.05)
            samples = [sample(SampleKind.Workload, flop=w, mop=q, t=t, p=p)
                       for w, q, t, p in rows]
            fit = fit_energy_coefficients(samples, GT["static_power"])
            errs.append(abs(fit.eps_mop - GT["eps_mop"]) / GT["eps_mop"])
        return float(np.median(errs))

    assert median_err(80) < median_err(10)


def test_fit_zero_flop_column_flags_unidentifiable():
    eps_m, pi0 = 100e-12, 5.0
    samples = [sample(SampleKind.Memory, run_id=i, flop=0, mop=q, t=0.1,
                      p=eps_m * q / 0.1 + pi0)
               for i, q in enumerate((10 ** 9, 3 * 10 ** 9, 7 * 10 ** 9))]
    fit = fit_energy_coefficients(samples, pi0)
    assert fit.unidentifiable == ("eps_flop",)
    assert fit.eps_flop == 0.0
    assert fit.eps_mop == pytest.approx(eps_m, rel=1e-9)


def test_fit_collinear_rows_rank_deficient():
    samples = [sample(SampleKind.Workload, flop=k * 10 ** 9, mop=k * 10 ** 8,
                      t=0.1 * k, p=50.0) for k in (1, 2, 4)]
    with pytest.raises(RankDeficient):
        fit_energy_coefficients(samples, 0.0)


def test_fit_negative_energy_detected():
    samples = [sample(SampleKind.Workload, flop=10 ** 9, mop=10 ** 8, t=1.0, p=1.0),
               sample(SampleKind.Workload, flop=2 * 10 ** 9, mop=10 ** 9, t=1.0, p=1.5)]
    with pytest.raises(NegativeEnergy):
        fit_energy_coefficients(samples, 50.0)


def test_fit_clamps_nonnegative():
    # data implies a tiny negative eps_flop after noise; NNLS clamps to zero
    eps_m = 100e-12
    rng = np.random.default_rng(5)
    samples = []
    for i in range(30):
        q = int(rng.integers(10 ** 9, 10 ** 10))
        w = int(rng.integers(1, 100))  # negligible flop, pure-memory workload
        p = eps_m * q / 0.1 * (1.0 + 0.02 * rng.standard_normal())
        samples.append(sample(SampleKind.Workload, flop=w, mop=q, t=0.1, p=p))
    fit = fit_energy_coefficients(samples, 0.0)
    assert fit.eps_flop >= 0.0
    assert fit.eps_mop == pytest.approx(eps_m, rel=0.05)


def test_csv_reader_header_and_comments():
    text = ("# comment line\n"
            "run_id,kind,size,flop,mop_bytes,time_s,power_w\n"
            "0,compute,256,1000000,2000,0.001,30.5\n"
            "# trailing comment\n"
            "0,idle,0,0,0,1.0,17.9\n")
    samples = read_measurements(text)
    assert len(samples) == 2
    assert samples[0].kind is SampleKind.Compute
    assert samples[1].power_w == 17.9


def test_csv_reader_rejects_bad_header_and_kind():
    with pytest.raises(SchemaError):
        read_measurements("run,kind\n0,compute\n")
    good_header = "run_id,kind,size,flop,mop_bytes,time_s,power_w\n"
    with pytest.raises(SchemaError):
        read_measurements(good_header + "0,turbo,1,1,1,1.0,2.0\n")
    with pytest.raises(SchemaError):
        read_measurements(good_header + "0,compute,1,0,1,1.0,2.0\n")  # flop must be > 0


def test_pipeline_recovers_maxn_within_tolerance():
    rng = np.random.default_rng(42)
    text = synth_measurement_csv(rng, **GT, throughput_noise=0.03, power_noise=0.01)
    samples = read_measurements(text)
    mode = PowerMode(8, 1651, 1300, 3200)
    roof = calibrate_measurements(samples, mode, Precision.FP32, device="synthetic")
    assert roof.peak_flops == pytest.approx(GT["peak_flops"], rel=0.03)
    assert roof.peak_bw == pytest.approx(GT["peak_bw"], rel=0.03)
    assert roof.static_power == pytest.approx(GT["static_power"], rel=0.02)
    assert roof.eps_flop == pytest.approx(GT["eps_flop"], rel=0.05)
    assert roof.eps_mop == pytest.approx(GT["eps_mop"], rel=0.05)
    assert roof.provenance is Provenance.Fitted


def test_pipeline_is_deterministic():
    rng = np.random.default_rng(7)
    text = synth_measurement_csv(rng, **GT)
    mode = PowerMode(8, 1651, 1300, 3200)
    a = calibrate_measurements(read_measurements(text), mode)
    b = calibrate_measurements(read_measurements(text), mode)
    assert a == b
