"""First-order exponential relaxation applied to periodic signal traces.

The relaxed signal is the periodic steady-state convolution of the input
with the causal kernel (1/tau) * exp(-t/tau) * u(t).  Two realizations are
provided: a frequency-domain multiplication by 1/(1 + i*2*pi*f*tau) (the
reference), and a causal time-domain recursion with the exact pole
a = exp(-dt/tau) that serves as an independent cross-check.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.signal import lfilter

from .physics import SignalTrace


@dataclasses.dataclass(frozen=True)
class RelaxationKernel:
    """Exponential relaxation kernel parameter; tau = 0 means no relaxation."""

    tau: float  # s

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")


def apply_relaxation(trace: SignalTrace, kernel: RelaxationKernel) -> SignalTrace:
    """Periodic steady-state response: multiply each DFT bin by 1/(1 + i*2*pi*f*tau)."""
    if kernel.tau == 0.0:
        return trace
    n = trace.samples.size
    freqs = np.fft.rfftfreq(n, trace.dt)
    gain = 1.0 / (1.0 + 2j * math.pi * freqs * kernel.tau)
    out = np.fft.irfft(np.fft.rfft(trace.samples) * gain, n)
    return SignalTrace(dt=trace.dt, samples=out, samples_per_period=trace.samples_per_period)


def _kernel_moments(r: float) -> tuple[float, float, float, float]:
    """Moments M_n = r * integral_0^1 exp(-r(1-s)) s^n ds for n = 0..3.

    Direct expressions lose precision for small r (they subtract terms of
    size 1/r^n); below r = 0.05 the series M_n = n! * r * sum_j (-r)^j/(n+j+1)!
    is used instead.
    """
    if r < 0.05:
        out = []
        for n in range(4):
            total = 0.0
            term = math.factorial(n) * r / math.factorial(n + 1)
            j = 0
            while abs(term) > 1e-20 * max(abs(total), 1e-300):
                total += term
                j += 1
                term *= -r / (n + j + 1)
            out.append(total)
        return tuple(out)  # type: ignore[return-value]
    a = math.exp(-r)
    m0 = 1.0 - a
    m1 = 1.0 - m0 / r
    m2 = 1.0 - 2.0 / r + 2.0 * m0 / r**2
    m3 = 1.0 - 3.0 / r + 6.0 / r**2 - 6.0 * m0 / r**3
    return m0, m1, m2, m3


def _recursion_taps(dt: float, tau: float) -> tuple[float, tuple[float, float, float, float]]:
    """Pole and input taps for the exact-pole recursion.

    The update y[i] = a*y[i-1] + w(-1)*x[i-2] + w(0)*x[i-1] + w(1)*x[i] + w(2)*x[i+1]
    integrates the kernel exactly against the cubic Lagrange interpolant of
    the input on each step, with a = exp(-dt/tau); the taps sum to 1 - a so
    the DC gain is exactly 1.
    """
    r = dt / tau
    a = math.exp(-r)
    m0, m1, m2, m3 = _kernel_moments(r)
    w_m1 = -(m3 - 3.0 * m2 + 2.0 * m1) / 6.0
    w_0 = (m3 - 2.0 * m2 - m1 + 2.0 * m0) / 2.0
    w_1 = -(m3 - m2 - 2.0 * m1) / 2.0
    w_2 = (m3 - m1) / 6.0
    return a, (w_m1, w_0, w_1, w_2)


def _exp_filter_stream(x: np.ndarray, dt: float, tau: float) -> np.ndarray:
    """Run the recursion over x (treated as periodic for the tap stencil)."""
    a, (w_m1, w_0, w_1, w_2) = _recursion_taps(dt, tau)
    z = (
        w_m1 * np.roll(x, 2)
        + w_0 * np.roll(x, 1)
        + w_1 * x
        + w_2 * np.roll(x, -1)
    )
    return lfilter([1.0], [1.0, -a], z)


def apply_relaxation_recursive(
    trace: SignalTrace, kernel: RelaxationKernel, settle_periods: int = 20
) -> SignalTrace:
    """Time-domain realization of the same kernel, for cross-checking.

    Prepends settle_periods periods of the (periodic) input, runs the
    recursion from zero state, and discards the settle prefix.
    """
    if not (isinstance(settle_periods, int) and settle_periods >= 1):
        raise ValueError(f"settle_periods must be an integer >= 1, got {settle_periods}")
    if kernel.tau == 0.0:
        return trace
    spp = trace.samples_per_period
    prefix = np.tile(trace.samples[:spp], settle_periods)
    extended = np.concatenate([prefix, trace.samples])
    out = _exp_filter_stream(extended, trace.dt, kernel.tau)[settle_periods * spp:]
    return SignalTrace(dt=trace.dt, samples=out, samples_per_period=spp)
