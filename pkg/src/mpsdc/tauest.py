"""Relaxation time-constant estimation from half-cycle mirror symmetry.

For the relaxation-free response, the falling-field half cycle is the
negated, time-reversed image of the rising-field half cycle.  First-order
relaxation breaks that symmetry in a way that is invertible per frequency
bin: with S_pos and S_neg the DFTs of the rising and falling halves,

    tau(f) = Re[ (S_pos*(f) + S_neg(f)) / (i*2*pi*f * (S_pos*(f) - S_neg(f))) ]

recovers the time constant at every energetic bin without any knowledge of
the particle model.

Half-cycle convention (load-bearing, pinned by the ideal-case identity
S_neg = -conj(S_pos) holding exactly on the DFT bin grid): each period is
cut at the drive extrema, sample indices p/4 and 3p/4 for p samples per
period with sample 0 at drive phase 0.  The rising half starts AT the
field minimum (index 3p/4, wrapping into the next period's start), the
falling half starts AT the field maximum (index p/4); both are re-based to
local time 0.  Under this convention the ideal halves satisfy the circular
mirror identity neg[j] = -pos[(N_h - j) mod N_h].
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from numpy.typing import NDArray

from .physics import DriveField, SignalTrace


class AllBinsExcluded(Exception):
    """No spectral bin passed the inclusion thresholds; tau is not estimable."""


# Bins whose symmetry-difference magnitude falls below this fraction of the
# spectral peak are never evaluated (the ratio denominator is ill-conditioned).
DENOMINATOR_GUARD = 1e-9
# Evaluated bins enter the aggregate only if their magnitude reaches this
# fraction of the strongest evaluated bin.
INCLUSION_FRACTION = 0.01
# Floor for |tau_k| when normalizing the imaginary-part residual.
_TAU_FLOOR = 1e-12
# Imaginary parts below _IMAG_NOISE_C * eps * max|S_pos| / (2*pi*f_k*|den_k|)
# are round-off, not model mismatch, and contribute zero residual.  For a
# noiseless first-order signal the ratio is analytically real, so the
# residual of any noiseless trace is exactly 0.
_IMAG_NOISE_C = 64.0


@dataclasses.dataclass(frozen=True, eq=False)
class HalfCyclePair:
    """One rising-field and one falling-field half cycle, re-based to t = 0."""

    pos: NDArray[np.float64]
    neg: NDArray[np.float64]
    dt: float

    def __post_init__(self) -> None:
        pos = np.array(self.pos, dtype=float, copy=True)
        neg = np.array(self.neg, dtype=float, copy=True)
        if pos.ndim != 1 or neg.ndim != 1 or pos.size != neg.size or pos.size == 0:
            raise ValueError("pos and neg must be non-empty 1-D arrays of equal length")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
            raise ValueError("half-cycle samples must be finite")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt}")
        pos.setflags(write=False)
        neg.setflags(write=False)
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "neg", neg)

    @property
    def n_half(self) -> int:
        return self.pos.size


@dataclasses.dataclass(frozen=True)
class TauBin:
    """Per-bin estimate; excluded bins carry NaN tau and ratio."""

    frequency: float  # Hz
    tau: float  # s
    ratio: complex
    magnitude: float  # |S_pos* - S_neg|, the weighting basis
    included: bool
    imag_floor: float = 0.0  # round-off level of Im(ratio) at this bin


@dataclasses.dataclass(frozen=True, eq=False)
class TauEstimate:
    """Aggregated estimate with its per-bin spectrum and quality residual."""

    tau_hat: float
    frequencies: NDArray[np.float64]
    taus: NDArray[np.float64]
    weights: NDArray[np.float64]
    residual: float

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.size == 0 or np.any(w < 0):
            raise ValueError("weights must be non-empty and non-negative")
        if abs(float(np.sum(w)) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        if abs(float(np.sum(w * np.asarray(self.taus))) - self.tau_hat) > 1e-9 * max(
            abs(self.tau_hat), _TAU_FLOOR
        ):
            raise ValueError("tau_hat must equal the weighted aggregate of the spectrum")
        if not (math.isfinite(self.residual) and self.residual >= 0):
            raise ValueError(f"residual must be finite and >= 0, got {self.residual}")


def _check_drive(trace: SignalTrace, drive: DriveField | None) -> None:
    if drive is None:
        return
    ratio = drive.frequency * trace.samples_per_period * trace.dt
    if abs(ratio - 1.0) > 1e-9:
        raise ValueError(
            f"drive frequency {drive.frequency} Hz does not match the trace "
            f"period of {trace.samples_per_period} samples at dt = {trace.dt} s"
        )


def extract_half_cycles(trace: SignalTrace, drive: DriveField | None = None) -> list[HalfCyclePair]:
    """Split each period at the drive extrema into one rising/falling pair.

    Requires samples_per_period divisible by 4 so the extrema fall on sample
    indices.  The rising half of period q reads samples [3p/4, p) of block q
    followed by [0, p/4) (the wrap is valid for periodic traces); the falling
    half reads [p/4, 3p/4).
    """
    spp = trace.samples_per_period
    if spp % 4 != 0:
        raise ValueError(f"samples_per_period must be a multiple of 4, got {spp}")
    _check_drive(trace, drive)
    q = spp // 4
    pairs = []
    for p in range(trace.periods):
        block = trace.samples[p * spp:(p + 1) * spp]
        pos = np.concatenate([block[3 * q:], block[:q]])
        neg = block[q:3 * q]
        pairs.append(HalfCyclePair(pos=pos, neg=neg, dt=trace.dt))
    return pairs


def mean_pair(pairs: list[HalfCyclePair]) -> HalfCyclePair:
    """Coherent (time-domain) average of half-cycle pairs across periods."""
    if not pairs:
        raise ValueError("cannot average an empty list of half-cycle pairs")
    pos = np.mean([p.pos for p in pairs], axis=0)
    neg = np.mean([p.neg for p in pairs], axis=0)
    return HalfCyclePair(pos=pos, neg=neg, dt=pairs[0].dt)


def half_cycle_spectra(pair: HalfCyclePair) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Unwindowed DFTs of the two halves; bins at k / (N_h * dt)."""
    return np.fft.fft(pair.pos), np.fft.fft(pair.neg)


def tau_spectrum(
    s_pos: NDArray[np.complex128],
    s_neg: NDArray[np.complex128],
    dt: float,
    denominator_guard: float = DENOMINATOR_GUARD,
) -> list[TauBin]:
    """Evaluate the per-bin recovery ratio at positive frequencies.

    Bin k = 0 is undefined (division by i*2*pi*f) and bins at or above the
    Nyquist index are conjugate duplicates of lower bins, so evaluation runs
    over 1 <= k < N_h/2.  Bins whose denominator magnitude falls below
    denominator_guard * max|S_pos| are flagged excluded and not evaluated.
    """
    s_pos = np.asarray(s_pos)
    s_neg = np.asarray(s_neg)
    if s_pos.shape != s_neg.shape or s_pos.ndim != 1:
        raise ValueError("spectra must be 1-D arrays of equal length")
    n_half = s_pos.size
    peak = float(np.max(np.abs(s_pos)))
    guard = denominator_guard * peak
    eps = np.finfo(float).eps
    bins = []
    for k in range(1, n_half // 2):
        f_k = k / (n_half * dt)
        num = np.conj(s_pos[k]) + s_neg[k]
        den_inner = np.conj(s_pos[k]) - s_neg[k]
        magnitude = abs(den_inner)
        if magnitude < guard:
            bins.append(TauBin(f_k, math.nan, complex(math.nan, math.nan), magnitude, False))
            continue
        ratio = num / (2j * math.pi * f_k * den_inner)
        imag_floor = _IMAG_NOISE_C * eps * peak / (2.0 * math.pi * f_k * magnitude)
        bins.append(TauBin(f_k, float(ratio.real), complex(ratio), magnitude, True, imag_floor))
    return bins


def aggregate_tau(
    bins: list[TauBin], inclusion_fraction: float = INCLUSION_FRACTION
) -> TauEstimate:
    """Magnitude-weighted aggregate over bins within inclusion_fraction of the peak.

    Weights are proportional to the symmetry-difference magnitude; the
    residual is the weighted imaginary-part fraction of the recovery ratio,
    a dimensionless quality metric.  Imaginary parts below each bin's
    round-off floor count as zero, so any noiseless first-order signal
    (including the relaxation-free limit) has residual exactly 0.
    """
    candidates = [b for b in bins if b.included]
    if not candidates:
        raise AllBinsExcluded("no spectral bin passed the denominator guard")
    peak = max(b.magnitude for b in candidates)
    kept = [b for b in candidates if b.magnitude >= inclusion_fraction * peak]
    if not kept:
        raise AllBinsExcluded("no spectral bin passed the inclusion threshold")
    mags = np.array([b.magnitude for b in kept])
    weights = mags / mags.sum()
    taus = np.array([b.tau for b in kept])
    freqs = np.array([b.frequency for b in kept])
    tau_hat = float(np.sum(weights * taus))
    imag = np.abs([b.ratio.imag for b in kept])
    imag[imag <= np.array([b.imag_floor for b in kept])] = 0.0
    residual = float(np.sum(weights * imag / np.maximum(np.abs(taus), _TAU_FLOOR)))
    return TauEstimate(
        tau_hat=tau_hat, frequencies=freqs, taus=taus, weights=weights, residual=residual
    )


def estimate_tau(
    trace: SignalTrace,
    drive: DriveField | None = None,
    denominator_guard: float = DENOMINATOR_GUARD,
    inclusion_fraction: float = INCLUSION_FRACTION,
) -> TauEstimate:
    """Estimate tau from a periodic trace.

    Halves are averaged coherently across periods before the DFT, so
    repetition noise is reduced at the signal level.  When drive is given
    its frequency is checked against the trace metadata.
    """
    pairs = extract_half_cycles(trace, drive)
    pair = mean_pair(pairs)
    s_pos, s_neg = half_cycle_spectra(pair)
    bins = tau_spectrum(s_pos, s_neg, pair.dt, denominator_guard)
    return aggregate_tau(bins, inclusion_fraction)
