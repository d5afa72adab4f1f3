import math

import numpy as np
import pytest

from mpsdc.physics import SignalTrace
from mpsdc.relaxation import (
    RelaxationKernel,
    _exp_filter_stream,
    _kernel_moments,
    apply_relaxation,
    apply_relaxation_recursive,
)

from conftest import make_ideal, make_tone

# r -> (M0, M1, M2, M3), 40-digit quadrature of r*exp(-r(1-s))*s^n on [0, 1];
# spans both the series branch (r < 0.05) and the closed-form branch.
MOMENT_ORACLE = {
    0.01: (0.0099501662508319466, 0.0049833749168053575, 0.0033250166389285219, 0.0024950083214434359),
    0.04: (0.0392105608476767914, 0.0197359788080802364, 0.0132010595959882013, 0.0099205303008849262),
    0.06: (0.0582354664157512884, 0.0294088930708118246, 0.0197035643062724786, 0.0148217846863760315),
    0.5: (0.3934693402873665764, 0.2130613194252668472, 0.1477547222989326112, 0.1134716662064043330),
    2.0: (0.8646647167633873081, 0.5676676416183063460, 0.4323323583816936540, 0.3515014624274595189),
}


class TestKernel:
    def test_rejects_negative_and_non_finite(self):
        for bad in (-1e-6, math.nan, math.inf):
            with pytest.raises(ValueError):
                RelaxationKernel(bad)

    def test_zero_allowed(self):
        assert RelaxationKernel(0.0).tau == 0.0


class TestFrequencyDomain:
    def test_tau_zero_identity(self):
        trace = make_ideal()
        out = apply_relaxation(trace, RelaxationKernel(0.0))
        assert np.array_equal(out.samples, trace.samples)

    def test_constant_trace_unit_dc_gain(self):
        trace = SignalTrace(dt=1e-6, samples=np.full(4096, 3.25), samples_per_period=4096)
        out = apply_relaxation(trace, RelaxationKernel(5e-6))
        assert np.allclose(out.samples, 3.25, rtol=0, atol=1e-12)

    def test_single_tone_transfer_function(self):
        # 1 kHz tone through tau = 50 us: gain 1/sqrt(1 + w^2 tau^2), lag atan(w tau)
        trace = make_tone(frequency_hz=1000.0)
        out = apply_relaxation(trace, RelaxationKernel(50e-6))
        theta = 2.0 * np.pi * np.arange(4096) / 4096
        coef_sin = 2.0 * np.mean(out.samples * np.sin(theta))
        coef_cos = 2.0 * np.mean(out.samples * np.cos(theta))
        amplitude = math.hypot(coef_sin, coef_cos)
        phase_lag = math.atan2(-coef_cos, coef_sin)
        wt = 2.0 * math.pi * 1000.0 * 50e-6
        assert amplitude == pytest.approx(1.0 / math.sqrt(1.0 + wt * wt), rel=1e-12)
        assert phase_lag == pytest.approx(math.atan(wt), rel=1e-12)
        # the quoted two tolerances of the contract
        assert amplitude == pytest.approx(0.9540282163779527, abs=1e-12)
        assert phase_lag == pytest.approx(0.3043957973650338, abs=1e-12)

    def test_linearity(self):
        x = make_ideal(frequency_hz=1000.0, amplitude_mt=10.0)
        y = make_ideal(frequency_hz=1000.0, amplitude_mt=15.0)
        kernel = RelaxationKernel(2e-6)
        a, b = 1.7, -0.4
        combined = SignalTrace(
            dt=x.dt, samples=a * x.samples + b * y.samples, samples_per_period=4096
        )
        lhs = apply_relaxation(combined, kernel).samples
        rhs = a * apply_relaxation(x, kernel).samples + b * apply_relaxation(y, kernel).samples
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)

    def test_rms_non_increasing(self):
        for tau in (0.5e-6, 2e-6, 10e-6):
            trace = make_ideal()
            out = apply_relaxation(trace, RelaxationKernel(tau))
            assert np.sqrt(np.mean(out.samples**2)) <= np.sqrt(np.mean(trace.samples**2))

    def test_periodicity_preserved(self):
        trace = make_ideal(periods=3)
        out = apply_relaxation(trace, RelaxationKernel(2e-6))
        spp = trace.samples_per_period
        peak = np.max(np.abs(out.samples))
        for p in (1, 2):
            assert np.max(np.abs(out.samples[:spp] - out.samples[p * spp:(p + 1) * spp])) <= 1e-12 * peak

    def test_cascade_is_not_sum_of_taus(self):
        # two poles in series differ from one pole at the summed tau
        trace = make_ideal()
        t1, t2 = 1e-6, 2e-6
        cascade = apply_relaxation(apply_relaxation(trace, RelaxationKernel(t1)), RelaxationKernel(t2))
        single = apply_relaxation(trace, RelaxationKernel(t1 + t2))
        rel = np.linalg.norm(cascade.samples - single.samples) / np.linalg.norm(single.samples)
        assert rel > 1e-4


class TestMoments:
    @pytest.mark.parametrize("r", sorted(MOMENT_ORACLE))
    def test_against_quadrature_oracle(self, r):
        values = _kernel_moments(r)
        for got, want in zip(values, MOMENT_ORACLE[r]):
            assert got == pytest.approx(want, rel=1e-13)

    def test_branch_continuity(self):
        # dM_n/dr < 1, so values straddling the branch switch differ by < dr
        dr = 2e-7
        below = _kernel_moments(0.05 - dr / 2)
        above = _kernel_moments(0.05 + dr / 2)
        for lo, hi in zip(below, above):
            assert 0 < hi - lo < dr


class TestRecursive:
    def test_tau_zero_identity(self):
        trace = make_ideal()
        out = apply_relaxation_recursive(trace, RelaxationKernel(0.0))
        assert np.array_equal(out.samples, trace.samples)

    def test_rejects_bad_settle(self):
        trace = make_ideal()
        with pytest.raises(ValueError):
            apply_relaxation_recursive(trace, RelaxationKernel(1e-6), settle_periods=0)

    def test_agrees_with_frequency_domain_at_contract_point(self):
        # tau = 2 us, f = 1 kHz, 4096 samples/period, 20 settle periods
        trace = make_ideal(frequency_hz=1000.0, spp=4096)
        kernel = RelaxationKernel(2e-6)
        ref = apply_relaxation(trace, kernel).samples
        out = apply_relaxation_recursive(trace, kernel, settle_periods=20).samples
        assert np.linalg.norm(out - ref) / np.linalg.norm(ref) <= 1e-6

    @pytest.mark.parametrize("tau", [0.5e-6, 5e-6])
    @pytest.mark.parametrize("frequency", [1000.0, 5000.0])
    def test_agreement_grid(self, tau, frequency):
        trace = make_ideal(frequency_hz=frequency)
        kernel = RelaxationKernel(tau)
        ref = apply_relaxation(trace, kernel).samples
        out = apply_relaxation_recursive(trace, kernel, settle_periods=20).samples
        assert np.linalg.norm(out - ref) / np.linalg.norm(ref) <= 1e-6

    def test_step_response_envelope(self):
        # constant input from zero state converges inside the exp(-t/tau) envelope
        tau = 2e-6
        dt = 2.5e-7
        level = 4.0
        x = np.full(512, level)
        y = _exp_filter_stream(x, dt, tau)
        i = np.arange(512)
        envelope = level * np.exp(-i * dt / tau)
        assert np.all(np.abs(y - level) <= envelope + 1e-12 * level)

    def test_multi_period_trace_supported(self):
        trace = make_ideal(periods=3)
        kernel = RelaxationKernel(1e-6)
        out = apply_relaxation_recursive(trace, kernel, settle_periods=5)
        assert out.samples.size == trace.samples.size
        ref = apply_relaxation(trace, kernel).samples
        assert np.linalg.norm(out.samples - ref) / np.linalg.norm(ref) <= 1e-6
