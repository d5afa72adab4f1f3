"""Equilibrium (Langevin) magnetization response of magnetic nanoparticles.

Synthesizes the relaxation-free receive signal of a particle sample driven
by a sinusoidal field along z with a static bias field along x.  The receive
axis is taken collinear with the drive axis, so the signal is the time
derivative of the z component of the normalized magnetization.  Signal
units are arbitrary (coil sensitivity normalized to 1).
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from numpy.typing import NDArray

BOLTZMANN = 1.380649e-23  # J/K


def _as_float_array(x) -> NDArray[np.float64]:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _scalar_or_array(out: NDArray[np.float64], like) -> float | NDArray[np.float64]:
    if np.ndim(like) == 0:
        return float(out[0])
    return out


# Below this the direct coth(x) - 1/x form cancels catastrophically; the
# series below keep full double precision up to the boundary.
_SERIES_CUTOFF = 0.1


def langevin(x) -> float | NDArray[np.float64]:
    """L(x) = coth(x) - 1/x, odd, strictly increasing, bounded in (-1, 1).

    Near zero the Laurent series x/3 - x^3/45 + 2x^5/945 - ... is used to
    avoid cancellation.  Accepts scalars or arrays.
    """
    arr = _as_float_array(x)
    out = np.empty_like(arr)
    small = np.abs(arr) < _SERIES_CUTOFF
    xs = arr[small]
    x2 = xs * xs
    out[small] = xs * (
        1.0 / 3.0
        + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * (2.0 / 93555.0))))
    )
    xl = arr[~small]
    out[~small] = 1.0 / np.tanh(xl) - 1.0 / xl
    return _scalar_or_array(out, x)


def dlangevin(x) -> float | NDArray[np.float64]:
    """Derivative of the Langevin function, 1/x^2 - 1/sinh(x)^2, even in x.

    Uses the series 1/3 - x^2/15 + 2x^4/189 - ... near zero; beyond
    |x| = 350 the sinh term underflows and 1/x^2 is returned directly.
    """
    arr = _as_float_array(x)
    out = np.empty_like(arr)
    small = np.abs(arr) < _SERIES_CUTOFF
    large = np.abs(arr) > 350.0
    mid = ~(small | large)
    x2 = arr[small] ** 2
    out[small] = (
        1.0 / 3.0
        + x2 * (-1.0 / 15.0 + x2 * (2.0 / 189.0 + x2 * (-1.0 / 675.0 + x2 * (2.0 / 10395.0))))
    )
    out[large] = 1.0 / arr[large] ** 2
    xm = arr[mid]
    out[mid] = 1.0 / xm**2 - 1.0 / np.sinh(xm) ** 2
    return _scalar_or_array(out, x)


def _langevin_over_x(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    """L(x)/x with the x -> 0 limit 1/3; even, positive, decreasing in |x|."""
    out = np.empty_like(arr)
    small = np.abs(arr) < _SERIES_CUTOFF
    x2 = arr[small] ** 2
    out[small] = (
        1.0 / 3.0
        + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * (2.0 / 93555.0))))
    )
    xl = arr[~small]
    out[~small] = (1.0 / np.tanh(xl) - 1.0 / xl) / xl
    return out


@dataclasses.dataclass(frozen=True)
class ParticleModel:
    """Single-domain nanoparticle parameters for the Langevin model.

    core_diameter: magnetic core diameter [m]
    saturation_magnetization: core volume magnetization [A/m]
    temperature: sample temperature [K]
    """

    core_diameter: float = 25e-9
    saturation_magnetization: float = 300e3
    temperature: float = 300.0

    def __post_init__(self) -> None:
        for name in ("core_diameter", "saturation_magnetization", "temperature"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")

    @property
    def magnetic_moment(self) -> float:
        """Core magnetic moment m = Ms * (pi/6) * d^3 [A*m^2]."""
        return self.saturation_magnetization * math.pi / 6.0 * self.core_diameter**3

    @property
    def xi_per_tesla(self) -> float:
        """Langevin argument per unit field, m / (kB*T) [1/T]."""
        return self.magnetic_moment / (BOLTZMANN * self.temperature)


@dataclasses.dataclass(frozen=True)
class DriveField:
    """Sinusoidal excitation field along the z axis."""

    frequency: float  # Hz
    amplitude: float  # T
    axis = "z"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ValueError(f"frequency must be finite and > 0, got {self.frequency}")
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValueError(f"amplitude must be finite and > 0, got {self.amplitude}")

    @property
    def period(self) -> float:
        return 1.0 / self.frequency


@dataclasses.dataclass(frozen=True)
class DcField:
    """Static bias field along the x axis, orthogonal to the drive field."""

    magnitude: float = 0.0  # T
    axis = "x"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.magnitude) and self.magnitude >= 0):
            raise ValueError(f"magnitude must be finite and >= 0, got {self.magnitude}")


@dataclasses.dataclass(frozen=True)
class SamplingConfig:
    """Uniform sampling grid over whole drive periods.

    samples_per_period must be a multiple of 4 so the drive extrema at T/4
    and 3T/4 fall exactly on sample indices.
    """

    samples_per_period: int = 4096
    periods: int = 1

    def __post_init__(self) -> None:
        spp = self.samples_per_period
        if not (isinstance(spp, int) and spp >= 4 and spp % 4 == 0):
            raise ValueError(
                f"samples_per_period must be a positive multiple of 4, got {spp}"
            )
        if not (isinstance(self.periods, int) and self.periods >= 1):
            raise ValueError(f"periods must be an integer >= 1, got {self.periods}")


@dataclasses.dataclass(frozen=True, eq=False)
class SignalTrace:
    """Uniformly sampled real signal spanning whole periods.

    dt: sample interval [s]
    samples: signal values, length = periods * samples_per_period
    samples_per_period: samples in one period; sample 0 is at drive phase 0
    """

    dt: float
    samples: NDArray[np.float64]
    samples_per_period: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt}")
        arr = np.array(self.samples, dtype=float, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must all be finite")
        spp = self.samples_per_period
        if not (isinstance(spp, int) and spp >= 1):
            raise ValueError(f"samples_per_period must be an integer >= 1, got {spp}")
        if arr.size % spp != 0:
            raise ValueError(
                f"trace length {arr.size} is not a whole number of periods of {spp}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def periods(self) -> int:
        return self.samples.size // self.samples_per_period

    @property
    def period_duration(self) -> float:
        return self.dt * self.samples_per_period

    def times(self) -> NDArray[np.float64]:
        return np.arange(self.samples.size) * self.dt


def field_at(t, drive: DriveField, dc: DcField):
    """Applied field components at time t: (Bx, Bz) in tesla."""
    bz = drive.amplitude * np.sin(2.0 * math.pi * drive.frequency * np.asarray(t, dtype=float))
    bx = np.broadcast_to(np.float64(dc.magnitude), bz.shape)
    if np.ndim(t) == 0:
        return float(bx), float(bz)
    return np.array(bx), bz


def magnetization_z(bx, bz, particle: ParticleModel) -> float | NDArray[np.float64]:
    """Normalized z magnetization L(xi*|B|) * Bz/|B|; 0 at |B| = 0.

    Odd in Bz for fixed Bx, saturating to +-1, and non-increasing in |Bx|
    for fixed Bz > 0.
    """
    bx_a = _as_float_array(bx)
    bz_a = _as_float_array(bz)
    bx_a, bz_a = np.broadcast_arrays(bx_a, bz_a)
    b = np.hypot(bx_a, bz_a)
    safe = np.where(b == 0.0, 1.0, b)
    out = np.asarray(langevin(particle.xi_per_tesla * b)) * (bz_a / safe)
    out = np.where(b == 0.0, 0.0, out)
    if np.ndim(bx) == 0 and np.ndim(bz) == 0:
        return float(out.reshape(-1)[0])
    return out


def _dmz_dbz(bx: NDArray, bz: NDArray, xi: float) -> NDArray[np.float64]:
    """d(m_z)/d(Bz) in cancellation-free form.

    With u = xi*|B|:  xi * [ L'(u) (Bz/B)^2 + (L(u)/u) (Bx/B)^2 ],
    which tends to xi/3 as |B| -> 0 along any direction.
    """
    b = np.hypot(bx, bz)
    safe = np.where(b == 0.0, 1.0, b)
    u = xi * b
    term = np.asarray(dlangevin(u)) * (bz / safe) ** 2 + _langevin_over_x(u) * (bx / safe) ** 2
    return xi * np.where(b == 0.0, 1.0 / 3.0, term)


def ideal_signal(
    particle: ParticleModel,
    drive: DriveField,
    dc: DcField,
    sampling: SamplingConfig,
) -> SignalTrace:
    """Relaxation-free receive signal d(m_z)/dt, sampled over whole periods.

    The derivative is evaluated analytically via the chain rule; one period
    is computed on the exact phase grid 2*pi*i/samples_per_period and tiled,
    so the trace is bit-exactly periodic.
    """
    spp = sampling.samples_per_period
    theta = 2.0 * math.pi * np.arange(spp) / spp
    bz = drive.amplitude * np.sin(theta)
    bx = np.full(spp, dc.magnitude)
    omega = 2.0 * math.pi * drive.frequency
    dbz_dt = drive.amplitude * omega * np.cos(theta)
    period = _dmz_dbz(bx, bz, particle.xi_per_tesla) * dbz_dt
    dt = 1.0 / (drive.frequency * spp)
    return SignalTrace(
        dt=dt,
        samples=np.tile(period, sampling.periods),
        samples_per_period=spp,
    )
