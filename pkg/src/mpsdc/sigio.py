"""Deterministic CSV emitters and readers for traces and result tables.

All floats are written with 17 significant digits so that reading a file
back reproduces the original values bit-exactly.  Files use '\\n' line
endings and contain nothing run-dependent (no timestamps).
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np

from .physics import SignalTrace
from .sweep import SummaryRow, SweepRecord

GENERATOR_TAG = "mpsdc-0.1.0"


class FormatError(ValueError):
    """Malformed signal CSV; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_signal_csv(trace: SignalTrace, destination: str | Path) -> None:
    """Write a trace as '# key=value' headers plus t_s,signal rows."""
    lines = [
        f"# dt_s={_fmt(trace.dt)}",
        f"# samples_per_period={trace.samples_per_period}",
        f"# generator={GENERATOR_TAG}",
        "t_s,signal",
    ]
    lines.extend(
        f"{_fmt(i * trace.dt)},{_fmt(v)}" for i, v in enumerate(trace.samples)
    )
    Path(destination).write_text("\n".join(lines) + "\n", newline="\n")


def read_signal_csv(source: str | Path) -> SignalTrace:
    """Read a trace written by write_signal_csv; bit-exact round trip."""
    text = Path(source).read_text()
    meta: dict[str, str] = {}
    samples: list[float] = []
    saw_column_row = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise FormatError(f"malformed header comment {line!r}", lineno)
            key, _, value = body.partition("=")
            meta[key.strip()] = value.strip()
            continue
        if not saw_column_row:
            if line != "t_s,signal":
                raise FormatError(f"expected column row 't_s,signal', got {line!r}", lineno)
            saw_column_row = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(f"expected two comma-separated fields, got {line!r}", lineno)
        try:
            samples.append(float(parts[1]))
        except ValueError:
            raise FormatError(f"signal value {parts[1]!r} is not a number", lineno) from None

    last_line = len(text.splitlines())
    if "dt_s" not in meta or "samples_per_period" not in meta:
        raise FormatError("missing dt_s or samples_per_period header", 1)
    try:
        dt = float(meta["dt_s"])
        spp = int(meta["samples_per_period"])
    except ValueError:
        raise FormatError("unparseable dt_s or samples_per_period header", 1) from None
    if not samples:
        raise FormatError("no data rows", last_line or 1)
    if spp < 1 or len(samples) % spp != 0:
        raise FormatError(
            f"{len(samples)} data rows is not a whole number of periods of "
            f"samples_per_period={spp}",
            last_line,
        )
    if not (math.isfinite(dt) and dt > 0):
        raise FormatError(f"dt_s must be finite and > 0, got {meta['dt_s']}", 1)
    return SignalTrace(dt=dt, samples=np.asarray(samples), samples_per_period=spp)


@dataclasses.dataclass(frozen=True)
class ResultTable:
    """Schema-checked rows ready for CSV emission."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self) -> None:
        if not self.columns:
            raise ValueError("a result table needs at least one column")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row width {len(row)} does not match the {len(self.columns)}-column schema"
                )

    @classmethod
    def from_records(cls, records: list[SweepRecord]) -> "ResultTable":
        columns = (
            "frequency_Hz",
            "amplitude_mT",
            "dc_label",
            "repetition",
            "rms",
            "peak",
            "fwhm_s",
            "tau_true_s",
            "tau_hat_s",
            "residual",
            "seed",
        )
        rows = tuple(
            (
                r.frequency_hz,
                r.amplitude_mt,
                r.dc_label,
                r.repetition,
                r.rms,
                r.peak,
                r.fwhm_s,
                r.tau_true_s,
                r.tau_hat_s,
                r.residual,
                r.seed,
            )
            for r in records
        )
        return cls(columns=columns, rows=rows)

    @classmethod
    def from_summary(cls, rows: list[SummaryRow]) -> "ResultTable":
        columns = (
            "frequency_Hz",
            "amplitude_mT",
            "dc_label",
            "n",
            "rms_mean",
            "rms_std",
            "tau_hat_mean_s",
            "tau_hat_std_s",
        )
        data = tuple(
            (
                r.frequency_hz,
                r.amplitude_mt,
                r.dc_label,
                r.n,
                r.rms_mean,
                r.rms_std,
                r.tau_hat_mean,
                r.tau_hat_std,
            )
            for r in rows
        )
        return cls(columns=columns, rows=data)


def _cell_text(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        raise ValueError("boolean cells are not part of any schema")
    if isinstance(value, int):
        return str(value)
    return _fmt(value)


def write_results_csv(table: ResultTable, destination: str | Path) -> None:
    """Emit the table with its fixed column order and 17-digit floats."""
    lines = [",".join(table.columns)]
    lines.extend(",".join(_cell_text(cell) for cell in row) for row in table.rows)
    Path(destination).write_text("\n".join(lines) + "\n", newline="\n")


def write_fieldmap_csv(xs, zs, bx, destination: str | Path) -> None:
    """Emit a field map as x_m,z_m,Bx_T rows in row-major grid order."""
    lines = ["x_m,z_m,Bx_T"]
    for i, x in enumerate(xs):
        for j, z in enumerate(zs):
            lines.append(f"{_fmt(x)},{_fmt(z)},{_fmt(bx[i, j])}")
    Path(destination).write_text("\n".join(lines) + "\n", newline="\n")
