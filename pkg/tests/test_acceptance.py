"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one PASS line on success (run with -s or -v to see them);
a failure raises with the measured value.
"""

import dataclasses
import filecmp
import math
import time
from pathlib import Path

import numpy as np
import pytest

from mpsdc.cli import main as cli_main
from mpsdc.coilfield import (
    MU0,
    CoilGeometry,
    MapGrid,
    center_sensitivity,
    chamber_fit,
    example_geometry,
    helmholtz_map,
    homogeneity_region,
    loop_field,
)
from mpsdc.physics import SignalTrace
from mpsdc.relaxation import RelaxationKernel, apply_relaxation, apply_relaxation_recursive
from mpsdc.sweep import NO_COIL_LABEL, TauProfile, default_plan, run_sweep
from mpsdc.tauest import estimate_tau, extract_half_cycles, half_cycle_spectra, mean_pair

from conftest import GRID_AMPLITUDES_MT, GRID_DC_FIELDS_MT, GRID_FREQUENCIES_HZ, make_ideal
from oracles import biot_savart_loop, golden_section_tau_fit

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="module")
def default_run():
    """Noiseless default sweep shared by the grid, trend, and stats criteria."""
    plan = default_plan()
    start = time.perf_counter()
    records = run_sweep(plan, threads=1)
    elapsed = time.perf_counter() - start
    return plan, records, elapsed


def test_criterion_1_grid_reproduction(default_run):
    plan, records, elapsed = default_run
    assert len(records) == 660
    assert len(plan.frequencies_hz) == 5
    assert len(plan.amplitudes_mt) == 4
    assert len(plan.dc_fields_mt) == 10
    assert plan.repetitions == 3
    assert elapsed <= 60.0
    print(f"\nACCEPTANCE 1: PASS - 660 records (5x4x(1+10)x3) in {elapsed:.2f} s")


def test_criterion_2_mirror_symmetry_identity():
    worst = 0.0
    for frequency in GRID_FREQUENCIES_HZ:
        for amplitude in GRID_AMPLITUDES_MT:
            for dc in (None,) + GRID_DC_FIELDS_MT:  # None is the no-coil reference
                trace = make_ideal(frequency, amplitude, dc or 0.0)
                pair = mean_pair(extract_half_cycles(trace))
                s_pos, s_neg = half_cycle_spectra(pair)
                deviation = float(
                    np.max(np.abs(s_neg + np.conj(s_pos))) / np.max(np.abs(s_pos))
                )
                worst = max(worst, deviation)
    assert worst <= 1e-9
    print(f"\nACCEPTANCE 2: PASS - mirror identity, worst deviation {worst:.2e} <= 1e-9")


def test_criterion_3_tau_round_trip():
    worst_rt = 0.0
    worst_oracle = 0.0
    for tau in (0.5e-6, 1e-6, 2e-6, 3e-6, 5e-6):
        for frequency in GRID_FREQUENCIES_HZ:
            for amplitude in GRID_AMPLITUDES_MT:
                ideal = make_ideal(frequency, amplitude, 0.0)
                relaxed = apply_relaxation(ideal, RelaxationKernel(tau))
                tau_hat = estimate_tau(relaxed).tau_hat
                worst_rt = max(worst_rt, abs(tau_hat - tau) / tau)
                fitted = golden_section_tau_fit(ideal, relaxed)
                worst_oracle = max(worst_oracle, abs(tau_hat - fitted) / fitted)
    assert worst_rt <= 0.02
    assert worst_oracle <= 0.01
    print(
        f"\nACCEPTANCE 3: PASS - round trip {worst_rt:.2e} <= 2%, "
        f"forward-fit oracle gap {worst_oracle:.2e} <= 1%"
    )


def test_criterion_4_relaxation_realizations():
    worst = 0.0
    for tau in (0.5e-6, 5e-6):
        for frequency in (1000.0, 5000.0):
            trace = make_ideal(frequency, 10.0, 0.0)
            kernel = RelaxationKernel(tau)
            reference = apply_relaxation(trace, kernel).samples
            recursive = apply_relaxation_recursive(trace, kernel, settle_periods=20).samples
            worst = max(
                worst, float(np.linalg.norm(recursive - reference) / np.linalg.norm(reference))
            )
    assert worst <= 1e-6
    print(f"\nACCEPTANCE 4: PASS - realizations agree, worst rel L2 {worst:.2e} <= 1e-6")


def test_criterion_5_saturation_trend(default_run):
    _, records, _ = default_run
    checked = 0
    for frequency in GRID_FREQUENCIES_HZ:
        for amplitude in GRID_AMPLITUDES_MT:
            cells = [
                r
                for r in records
                if r.frequency_hz == frequency
                and r.amplitude_mt == amplitude
                and r.dc_label != NO_COIL_LABEL
                and r.repetition == 0
            ]
            cells.sort(key=lambda r: float(r.dc_label))
            rms_values = [r.rms for r in cells]
            peak_values = [r.peak for r in cells]
            assert all(b < a for a, b in zip(rms_values, rms_values[1:])), (frequency, amplitude)
            assert all(b < a for a, b in zip(peak_values, peak_values[1:])), (frequency, amplitude)
            checked += 1
    assert checked == 20
    print("\nACCEPTANCE 5: PASS - RMS and peak strictly decrease over 0..9 mT at all 20 settings")


def test_criterion_6_injected_profile_tracking():
    profile = TauProfile.dip(2e-6, 0.35, 3e-3, 1.5e-3, 8.3e-5)
    plan = dataclasses.replace(default_plan(tau_profile=profile), repetitions=1)
    records = run_sweep(plan)
    worst = 0.0
    for frequency in GRID_FREQUENCIES_HZ:
        # the regime bound 2*pi*f*tau <= 0.2 holds for every profile value here
        assert 2 * math.pi * frequency * max(profile(v * 1e-3) for v in range(10)) <= 0.2
        for amplitude in GRID_AMPLITUDES_MT:
            cells = [
                r
                for r in records
                if r.frequency_hz == frequency
                and r.amplitude_mt == amplitude
                and r.dc_label != NO_COIL_LABEL
            ]
            cells.sort(key=lambda r: float(r.dc_label))
            estimates = [r.tau_hat_s for r in cells]
            for r in cells:
                worst = max(worst, abs(r.tau_hat_s - r.tau_true_s) / r.tau_true_s)
            assert int(np.argmin(estimates)) == 3, (frequency, amplitude)
            assert any(b > a for a, b in zip(estimates, estimates[1:]))  # non-monotonic: falls
            assert any(b < a for a, b in zip(estimates, estimates[1:]))  # ... then rises
    assert worst <= 0.03
    print(
        f"\nACCEPTANCE 6: PASS - dip profile tracked, minimum at 3 mT everywhere, "
        f"worst error {worst:.2e} <= 3%"
    )


def test_criterion_7_coil_field_correctness():
    # brute-force Biot-Savart cross-check at 100 random off-conductor points
    rng = np.random.default_rng(20260810)
    radius = 0.05
    worst = 0.0
    for _ in range(100):
        axial = rng.uniform(-0.08, 0.08)
        radial = rng.uniform(0.0, 0.08)
        if abs(radial - radius) < 5e-3 and abs(axial) < 5e-3:
            radial += 0.01  # stay off the conductor
        b_ax, b_rad = loop_field(radius, 12, 1.3, axial, radial)
        o_ax, o_rad = biot_savart_loop(radius, 12, 1.3, axial, radial, segments=1_000_000)
        scale = math.hypot(o_ax, o_rad)
        worst = max(worst, math.hypot(b_ax - o_ax, b_rad - o_rad) / scale)
    assert worst <= 1e-9

    geometry = CoilGeometry(loop_radius=0.1, loop_separation=0.1, turns_per_loop=100, current=1.0)
    ideal_center = (4.0 / 5.0) ** 1.5 * MU0 * 100 * 1.0 / 0.1
    measured = center_sensitivity(geometry)
    assert abs(measured - ideal_center) <= 1e-3 * ideal_center

    field_map = helmholtz_map(example_geometry(), MapGrid(0.03, 0.02, 0.0005))
    flipped = field_map.bx[::-1, :]
    assert np.max(np.abs(field_map.bx - flipped)) <= 1e-12 * np.max(np.abs(field_map.bx))

    region = homogeneity_region(field_map, 0.95)
    assert chamber_fit(region, 0.007, 0.020, "along_drive_axis")
    print(
        f"\nACCEPTANCE 7: PASS - loop field vs segment sum {worst:.2e} <= 1e-9, "
        f"center field {measured * 1e3:.4f} mT/A, map symmetric, chamber fits"
    )


def test_criterion_8_determinism(tmp_path):
    config = str(CONFIG_DIR / "default.toml")
    dirs = [tmp_path / name for name in ("run1", "run2", "run4")]
    for out_dir, threads in zip(dirs, ("1", "1", "4")):
        code = cli_main(
            ["sweep", "--config", config, "--out-dir", str(out_dir), "--threads", threads]
        )
        assert code == 0
    files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
    assert len(files) == 42  # results, summary, 20 tau plots, 20 rms plots
    assert sum(1 for f in files if f.name.startswith("tau_vs_dc_")) == 20
    for rel in files:
        for other in dirs[1:]:
            assert filecmp.cmp(dirs[0] / rel, other / rel, shallow=False), rel
    print(
        f"\nACCEPTANCE 8: PASS - {len(files)} output files byte-identical across "
        "reruns and 1 vs 4 threads"
    )


def test_criterion_9_noise_robustness():
    tau = 2e-6
    ideal = make_ideal(1000.0, 10.0, 0.0, periods=8)
    relaxed = apply_relaxation(ideal, RelaxationKernel(tau))
    sigma = float(np.sqrt(np.mean(relaxed.samples**2))) * 10 ** (-40 / 20)
    errors = []
    for seed in range(101):
        rng = np.random.default_rng(seed)
        noisy = SignalTrace(
            dt=relaxed.dt,
            samples=relaxed.samples + rng.normal(0.0, sigma, relaxed.samples.size),
            samples_per_period=relaxed.samples_per_period,
        )
        errors.append(abs(estimate_tau(noisy).tau_hat - tau) / tau)
    median = float(np.median(errors))
    assert median <= 0.05
    print(f"\nACCEPTANCE 9: PASS - 40 dB SNR, 101 seeds, median tau error {median:.2e} <= 5%")
