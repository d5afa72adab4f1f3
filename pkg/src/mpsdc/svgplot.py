"""Self-contained deterministic SVG emitters: line plots and field heatmaps.

No plotting dependency; output is a pure function of the inputs (no ids,
no timestamps), so files are byte-comparable in tests.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np

from .coilfield import FieldMap


class EmptySeries(ValueError):
    """A plot needs at least one series with at least two points."""


@dataclasses.dataclass(frozen=True)
class Series:
    x: tuple[float, ...]
    y: tuple[float, ...]
    label: str

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have equal length")
        if len(self.x) < 2:
            raise EmptySeries(f"series {self.label!r} has fewer than 2 points")
        if any(not math.isfinite(v) for v in list(self.x) + list(self.y)):
            raise ValueError(f"series {self.label!r} contains non-finite values")


@dataclasses.dataclass(frozen=True)
class PlotStyle:
    width: int = 640
    height: int = 420
    title: str = ""
    x_label: str = ""
    y_label: str = ""


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 16, 30, 46


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """1-2-5 tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target, 1)
    magnitude = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * magnitude:
            step = mult * magnitude
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def _fmt_tick(value: float) -> str:
    return format(value, ".6g")


def _coord(value: float) -> str:
    return format(value, ".2f")


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def plot_svg(series: list[Series], style: PlotStyle, destination: str | Path) -> None:
    """Line plot with axes, 1-2-5 ticks, and a legend; one polyline per series."""
    if not series:
        raise EmptySeries("no series to plot")
    x_lo = min(min(s.x) for s in series)
    x_hi = max(max(s.x) for s in series)
    y_lo = min(min(s.y) for s in series)
    y_hi = max(max(s.y) for s in series)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    plot_w = style.width - _MARGIN_L - _MARGIN_R
    plot_h = style.height - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="#ffffff"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#000000" stroke-width="1"/>',
    ]
    if style.title:
        parts.append(
            f'<text x="{style.width // 2}" y="{_MARGIN_T - 10}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{_escape(style.title)}</text>'
        )

    for t in _nice_ticks(x_lo, x_hi):
        if not (x_lo <= t <= x_hi):
            continue
        x = px(t)
        y0 = _MARGIN_T + plot_h
        parts.append(
            f'<line x1="{_coord(x)}" y1="{y0}" x2="{_coord(x)}" y2="{y0 + 5}" '
            f'stroke="#000000" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_coord(x)}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(t)}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        if not (y_lo <= t <= y_hi):
            continue
        y = py(t)
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{_coord(y)}" x2="{_MARGIN_L}" y2="{_coord(y)}" '
            f'stroke="#000000" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{_coord(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(t)}</text>'
        )
    if style.x_label:
        parts.append(
            f'<text x="{_MARGIN_L + plot_w // 2}" y="{style.height - 8}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{_escape(style.x_label)}</text>"
        )
    if style.y_label:
        x = 14
        y = _MARGIN_T + plot_h // 2
        parts.append(
            f'<text x="{x}" y="{y}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" transform="rotate(-90 {x} {y})">{_escape(style.y_label)}</text>'
        )

    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{_coord(px(x))},{_coord(py(y))}" for x, y in zip(s.x, s.y))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = _MARGIN_T + 14 + 16 * i
        lx = _MARGIN_L + plot_w - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" font-size="11">'
            f"{_escape(s.label)}</text>"
        )

    parts.append("</svg>")
    Path(destination).write_text("\n".join(parts) + "\n", newline="\n")


# Blue -> white -> red anchors for the signed heatmap palette.
_HEAT_ANCHORS = ((13, 36, 115), (84, 134, 214), (255, 255, 255), (220, 108, 66), (138, 16, 16))


def _heat_color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    scaled = t * (len(_HEAT_ANCHORS) - 1)
    i = min(int(scaled), len(_HEAT_ANCHORS) - 2)
    frac = scaled - i
    r, g, b = (
        round(a + (b2 - a) * frac)
        for a, b2 in zip(_HEAT_ANCHORS[i], _HEAT_ANCHORS[i + 1])
    )
    return f"#{r:02x}{g:02x}{b:02x}"


def field_heatmap_svg(
    field_map: FieldMap, destination: str | Path, title: str = "", cell_px: int = 6
) -> None:
    """Rasterize a field map into one colored rect per grid node."""
    nx, nz = field_map.bx.shape
    margin_l, margin_t, margin_b = 60, 30, 60
    width = margin_l + nx * cell_px + 20
    height = margin_t + nz * cell_px + margin_b
    lo = float(np.min(field_map.bx))
    hi = float(np.max(field_map.bx))
    span = hi - lo if hi > lo else 1.0

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width // 2}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{_escape(title)}</text>'
        )
    for i in range(nx):
        for j in range(nz):
            t = (field_map.bx[i, j] - lo) / span
            x = margin_l + i * cell_px
            y = margin_t + (nz - 1 - j) * cell_px
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" '
                f'fill="{_heat_color(t)}"/>'
            )
    parts.append(
        f'<text x="{margin_l}" y="{height - 34}" font-family="sans-serif" font-size="11">'
        f"x: {_fmt_tick(field_map.xs[0] * 1e3)} to {_fmt_tick(field_map.xs[-1] * 1e3)} mm, "
        f"z: {_fmt_tick(field_map.zs[0] * 1e3)} to {_fmt_tick(field_map.zs[-1] * 1e3)} mm</text>"
    )
    parts.append(
        f'<text x="{margin_l}" y="{height - 16}" font-family="sans-serif" font-size="11">'
        f"Bx: {_fmt_tick(lo * 1e3)} to {_fmt_tick(hi * 1e3)} mT</text>"
    )
    parts.append("</svg>")
    Path(destination).write_text("\n".join(parts) + "\n", newline="\n")
