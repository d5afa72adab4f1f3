"""Simulated experiment grid: drive settings x DC fields x repetitions.

Each cell synthesizes the relaxation-free signal, looks up the true time
constant from an injectable tau(B_dc) profile, applies relaxation, optionally
adds seeded measurement noise, and records RMS, pulse shape, and the
estimated time constant.  The default grid is 5 frequencies x 4 amplitudes
x (1 no-coil reference + 10 DC fields) x 3 repetitions = 660 records.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .physics import DcField, DriveField, ParticleModel, SamplingConfig, SignalTrace, ideal_signal
from .relaxation import RelaxationKernel, apply_relaxation
from .tauest import AllBinsExcluded, estimate_tau, extract_half_cycles, mean_pair

NO_COIL_LABEL = "no_coil"


class NoPeak(ValueError):
    """The averaged positive half cycle has no strictly positive maximum."""


def rms(trace: SignalTrace) -> float:
    """Root-mean-square of the trace samples."""
    return float(np.sqrt(np.mean(trace.samples**2)))


def peak_fwhm(trace: SignalTrace) -> tuple[float, float]:
    """Peak and full width at half maximum of the averaged rising-field half.

    The width is linearly interpolated at half the peak on both flanks;
    flanks that never drop below half peak are clamped at the half-cycle
    boundary.
    """
    pos = mean_pair(extract_half_cycles(trace)).pos
    peak = float(pos.max())
    if peak <= 0.0:
        raise NoPeak("averaged positive half cycle has no positive maximum")
    half = 0.5 * peak
    imax = int(pos.argmax())
    dt = trace.dt

    j = imax
    while j > 0 and pos[j - 1] > half:
        j -= 1
    if j == 0:
        t_left = 0.0
    else:
        t_left = (j - 1 + (half - pos[j - 1]) / (pos[j] - pos[j - 1])) * dt

    j = imax
    while j < pos.size - 1 and pos[j + 1] > half:
        j += 1
    if j == pos.size - 1:
        t_right = (pos.size - 1) * dt
    else:
        t_right = (j + (pos[j] - half) / (pos[j] - pos[j + 1])) * dt

    return peak, float(t_right - t_left)


def add_noise(trace: SignalTrace, snr_db: float | None, seed: int) -> SignalTrace:
    """Add zero-mean white Gaussian noise at the given SNR; None is a no-op.

    The noise standard deviation is RMS(trace) * 10^(-snr_db/20) and the
    realization is fully determined by the seed.
    """
    if snr_db is None:
        return trace
    sigma = rms(trace) * 10.0 ** (-snr_db / 20.0)
    if sigma == 0.0:
        raise ValueError("cannot scale noise to an all-zero trace")
    rng = np.random.default_rng(seed)
    noisy = trace.samples + rng.normal(0.0, sigma, trace.samples.size)
    return SignalTrace(dt=trace.dt, samples=noisy, samples_per_period=trace.samples_per_period)


@dataclasses.dataclass(frozen=True)
class TauProfile:
    """Injected tau as a function of the DC field magnitude.

    kinds:
      constant -- tau independent of the field
      table    -- linear interpolation over (B_dc, tau) points, clamped
      dip      -- Gaussian dip of fractional depth at dip_center plus a
                  one-sided linear rise beyond it, emulating a time constant
                  that first falls and then grows with the bias field
    """

    kind: str
    constant_tau: float = 0.0
    table_fields: tuple[float, ...] = ()
    table_taus: tuple[float, ...] = ()
    tau0: float = 0.0
    depth: float = 0.0
    dip_center: float = 0.0
    dip_width: float = 0.0
    rise_rate: float = 0.0  # s/T

    def __post_init__(self) -> None:
        if self.kind == "constant":
            if not (math.isfinite(self.constant_tau) and self.constant_tau > 0):
                raise ValueError(f"constant tau must be > 0, got {self.constant_tau}")
        elif self.kind == "table":
            fields = np.asarray(self.table_fields, dtype=float)
            taus = np.asarray(self.table_taus, dtype=float)
            if fields.size < 1 or fields.size != taus.size:
                raise ValueError("table needs equal-length, non-empty field and tau lists")
            if np.any(np.diff(fields) <= 0):
                raise ValueError("table fields must be strictly ascending")
            if np.any(taus <= 0) or not np.all(np.isfinite(taus)):
                raise ValueError("table taus must all be finite and > 0")
        elif self.kind == "dip":
            if not (math.isfinite(self.tau0) and self.tau0 > 0):
                raise ValueError(f"tau0 must be > 0, got {self.tau0}")
            if not (0.0 <= self.depth < 1.0):
                raise ValueError(f"depth must be in [0, 1), got {self.depth}")
            if not (math.isfinite(self.dip_width) and self.dip_width > 0):
                raise ValueError(f"dip_width must be > 0, got {self.dip_width}")
            if self.dip_center < 0 or not math.isfinite(self.dip_center):
                raise ValueError(f"dip_center must be >= 0, got {self.dip_center}")
            if self.rise_rate < 0 or not math.isfinite(self.rise_rate):
                raise ValueError(f"rise_rate must be >= 0, got {self.rise_rate}")
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    @classmethod
    def constant(cls, tau: float) -> "TauProfile":
        return cls(kind="constant", constant_tau=tau)

    @classmethod
    def from_table(cls, fields, taus) -> "TauProfile":
        return cls(kind="table", table_fields=tuple(fields), table_taus=tuple(taus))

    @classmethod
    def dip(
        cls, tau0: float, depth: float, dip_center: float, dip_width: float, rise_rate: float
    ) -> "TauProfile":
        return cls(
            kind="dip",
            tau0=tau0,
            depth=depth,
            dip_center=dip_center,
            dip_width=dip_width,
            rise_rate=rise_rate,
        )

    def __call__(self, b_dc: float) -> float:
        if self.kind == "constant":
            return self.constant_tau
        if self.kind == "table":
            return float(np.interp(b_dc, self.table_fields, self.table_taus))
        gauss = math.exp(-0.5 * ((b_dc - self.dip_center) / self.dip_width) ** 2)
        return self.tau0 * (1.0 - self.depth * gauss) + self.rise_rate * max(
            b_dc - self.dip_center, 0.0
        )


@dataclasses.dataclass(frozen=True)
class SweepPlan:
    """Experiment grid definition.

    Drive and DC settings are stored in the units they are configured in
    (Hz and mT) so emitted tables reproduce them exactly; conversion to
    tesla happens at synthesis time.  A no-coil reference cell is always
    run before the DC cells of each drive setting.
    """

    frequencies_hz: tuple[float, ...]
    amplitudes_mt: tuple[float, ...]
    dc_fields_mt: tuple[float, ...]
    repetitions: int
    tau_profile: TauProfile
    particle: ParticleModel
    sampling: SamplingConfig
    master_seed: int
    snr_db: float | None = None

    def __post_init__(self) -> None:
        for name in ("frequencies_hz", "amplitudes_mt", "dc_fields_mt"):
            values = getattr(self, name)
            if len(values) == 0:
                raise ValueError(f"{name} must be non-empty")
            if any(not math.isfinite(v) for v in values):
                raise ValueError(f"{name} must be finite")
        if any(v <= 0 for v in self.frequencies_hz):
            raise ValueError("frequencies must be > 0")
        if any(v <= 0 for v in self.amplitudes_mt):
            raise ValueError("amplitudes must be > 0")
        if any(v < 0 for v in self.dc_fields_mt):
            raise ValueError("DC fields must be >= 0")
        if not (isinstance(self.repetitions, int) and self.repetitions >= 1):
            raise ValueError(f"repetitions must be an integer >= 1, got {self.repetitions}")
        if not (isinstance(self.master_seed, int) and 0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be an integer in [0, 2^64)")
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValueError(f"snr_db must be finite or None, got {self.snr_db}")

    @property
    def cells_per_setting(self) -> int:
        return 1 + len(self.dc_fields_mt)

    @property
    def record_count(self) -> int:
        return (
            len(self.frequencies_hz)
            * len(self.amplitudes_mt)
            * self.cells_per_setting
            * self.repetitions
        )


def default_plan(
    tau_profile: TauProfile | None = None,
    master_seed: int = 20260810,
    snr_db: float | None = None,
    repetitions: int = 3,
    sampling: SamplingConfig | None = None,
) -> SweepPlan:
    """The stock 660-record grid: 5 x 4 x (1 + 10) x 3."""
    return SweepPlan(
        frequencies_hz=(1000.0, 2000.0, 3000.0, 4000.0, 5000.0),
        amplitudes_mt=(7.5, 10.0, 12.5, 15.0),
        dc_fields_mt=tuple(float(v) for v in range(10)),
        repetitions=repetitions,
        tau_profile=tau_profile or TauProfile.constant(2e-6),
        particle=ParticleModel(),
        sampling=sampling or SamplingConfig(samples_per_period=4096, periods=1),
        master_seed=master_seed,
        snr_db=snr_db,
    )


@dataclasses.dataclass(frozen=True)
class SweepRecord:
    """One measurement row; tau_hat_s is NaN when estimation was impossible."""

    frequency_hz: float
    amplitude_mt: float
    dc_label: str
    repetition: int
    rms: float
    peak: float
    fwhm_s: float
    tau_true_s: float
    tau_hat_s: float
    residual: float
    seed: int


@dataclasses.dataclass(frozen=True)
class SummaryRow:
    """Per-cell statistics across repetitions (sample std, 0 for n = 1)."""

    frequency_hz: float
    amplitude_mt: float
    dc_label: str
    n: int
    rms_mean: float
    rms_std: float
    tau_hat_mean: float
    tau_hat_std: float


def derive_seed(master_seed: int, cell_index: int, repetition: int) -> int:
    """64-bit per-repetition seed, reproducible in isolation.

    Uses numpy's SeedSequence with spawn_key = (cell_index, repetition); the
    first generated 64-bit word both seeds the noise generator and is stored
    in the record.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(cell_index, repetition))
    return int(ss.generate_state(1, np.uint64)[0])


def _format_label(value_mt: float) -> str:
    return format(float(value_mt), ".17g")


def _cells(plan: SweepPlan) -> list[tuple[int, float, float, str, float]]:
    """Row-major cell list: (index, frequency_Hz, amplitude_mT, label, dc_mT)."""
    cells = []
    index = 0
    for f in plan.frequencies_hz:
        for a in plan.amplitudes_mt:
            for label, dc_mt in [(NO_COIL_LABEL, 0.0)] + [
                (_format_label(v), float(v)) for v in plan.dc_fields_mt
            ]:
                cells.append((index, f, a, label, dc_mt))
                index += 1
    return cells


def _run_cell(plan: SweepPlan, cell: tuple[int, float, float, str, float]) -> list[SweepRecord]:
    index, freq, amp_mt, label, dc_mt = cell
    drive = DriveField(frequency=freq, amplitude=amp_mt * 1e-3)
    dc = DcField(magnitude=dc_mt * 1e-3)
    tau_true = plan.tau_profile(dc.magnitude)
    ideal = ideal_signal(plan.particle, drive, dc, plan.sampling)
    relaxed = apply_relaxation(ideal, RelaxationKernel(tau_true))
    records = []
    for rep in range(plan.repetitions):
        seed = derive_seed(plan.master_seed, index, rep)
        observed = add_noise(relaxed, plan.snr_db, seed)
        try:
            estimate = estimate_tau(observed, drive)
            tau_hat, residual = estimate.tau_hat, estimate.residual
        except AllBinsExcluded:
            tau_hat, residual = math.nan, math.nan
        peak, fwhm = peak_fwhm(observed)
        records.append(
            SweepRecord(
                frequency_hz=freq,
                amplitude_mt=amp_mt,
                dc_label=label,
                repetition=rep,
                rms=rms(observed),
                peak=peak,
                fwhm_s=fwhm,
                tau_true_s=tau_true,
                tau_hat_s=tau_hat,
                residual=residual,
                seed=seed,
            )
        )
    return records


def run_sweep(plan: SweepPlan, threads: int = 1) -> list[SweepRecord]:
    """Run every cell of the plan in deterministic row-major order.

    Cells are independent; with threads > 1 they are evaluated concurrently
    but the output is identical to the serial run (each cell's arithmetic is
    self-contained and the results are reassembled in grid order).
    """
    if not (isinstance(threads, int) and threads >= 1):
        raise ValueError(f"threads must be an integer >= 1, got {threads}")
    cells = _cells(plan)
    if threads == 1:
        per_cell = [_run_cell(plan, cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_cell = list(pool.map(lambda c: _run_cell(plan, c), cells))
    return [record for group in per_cell for record in group]


def summarize(records: list[SweepRecord]) -> list[SummaryRow]:
    """Mean and sample standard deviation per cell, in first-seen cell order."""
    if not records:
        raise ValueError("cannot summarize an empty record list")
    order: list[tuple[float, float, str]] = []
    groups: dict[tuple[float, float, str], list[SweepRecord]] = {}
    for record in records:
        key = (record.frequency_hz, record.amplitude_mt, record.dc_label)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(record)

    def _stats(values: list[float]) -> tuple[float, float]:
        arr = np.asarray(values, dtype=float)
        mean = float(arr.mean())
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return mean, std

    rows = []
    for key in order:
        group = groups[key]
        rms_mean, rms_std = _stats([r.rms for r in group])
        tau_mean, tau_std = _stats([r.tau_hat_s for r in group])
        rows.append(
            SummaryRow(
                frequency_hz=key[0],
                amplitude_mt=key[1],
                dc_label=key[2],
                n=len(group),
                rms_mean=rms_mean,
                rms_std=rms_std,
                tau_hat_mean=tau_mean,
                tau_hat_std=tau_std,
            )
        )
    return rows
