"""Static field of a two-loop bias coil: maps, sensitivity, homogeneity.

The coil is a pair of coaxial filamentary current loops along the x axis.
Off-axis fields use the standard complete-elliptic-integral expressions for
a circular loop; maps are sampled in the x-z plane (x = coil axis).
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from numpy.typing import NDArray

MU0 = 4.0e-7 * math.pi  # vacuum permeability [H/m]

# Distance from the filament below which the field is treated as singular.
WIRE_GUARD = 1e-9  # m


class OnWireSingularity(ValueError):
    """Field requested within WIRE_GUARD of the conductor filament."""


class ZeroCenterField(ValueError):
    """Homogeneity is undefined when the center field is (numerically) zero."""


def elliptic_ke(m) -> tuple[float | NDArray, float | NDArray]:
    """Complete elliptic integrals K(m), E(m) for 0 <= m < 1 via the AGM.

    The arithmetic-geometric mean iteration converges quadratically; the
    companion sum over the c terms yields E.  Absolute error <= 1e-12.
    K diverges as m -> 1, so m >= 1 is rejected.
    """
    arr = np.atleast_1d(np.asarray(m, dtype=float))
    if np.any(arr < 0) or np.any(arr >= 1):
        raise ValueError("m must satisfy 0 <= m < 1")
    a = np.ones_like(arr)
    b = np.sqrt(1.0 - arr)
    c = np.sqrt(arr)
    csum = 0.5 * c**2
    power = 1.0
    for _ in range(60):
        if np.all(np.abs(c) < 1e-17):
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        csum = csum + power * c**2
        power *= 2.0
    k = math.pi / (2.0 * a)
    e = k * (1.0 - csum)
    if np.ndim(m) == 0:
        return float(k[0]), float(e[0])
    return k, e


def elliptic_e(m) -> float | NDArray:
    """Complete elliptic integral E(m) for 0 <= m <= 1 (E(1) = 1 exactly)."""
    arr = np.atleast_1d(np.asarray(m, dtype=float))
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("m must satisfy 0 <= m <= 1")
    out = np.ones_like(arr)
    inside = arr < 1.0
    if np.any(inside):
        _, e = elliptic_ke(arr[inside])
        out[inside] = e
    if np.ndim(m) == 0:
        return float(out[0])
    return out


@dataclasses.dataclass(frozen=True)
class CoilGeometry:
    """Two coaxial loops along x, centered at x = +-loop_separation/2."""

    loop_radius: float  # m
    loop_separation: float  # m, center to center
    turns_per_loop: int
    current: float  # A

    def __post_init__(self) -> None:
        if not (math.isfinite(self.loop_radius) and self.loop_radius > 0):
            raise ValueError(f"loop_radius must be finite and > 0, got {self.loop_radius}")
        if not (math.isfinite(self.loop_separation) and self.loop_separation > 0):
            raise ValueError(
                f"loop_separation must be finite and > 0, got {self.loop_separation}"
            )
        if not (isinstance(self.turns_per_loop, int) and self.turns_per_loop >= 1):
            raise ValueError(f"turns_per_loop must be an integer >= 1, got {self.turns_per_loop}")
        if not math.isfinite(self.current):
            raise ValueError(f"current must be finite, got {self.current}")


def loop_field(
    radius: float,
    turns: int,
    current: float,
    axial_offset,
    radial_offset,
) -> tuple[float | NDArray, float | NDArray]:
    """Field of one filamentary loop at (axial_offset, radial_offset) from its center.

    Returns (B_axial, B_radial) in tesla.  B_radial is signed along the
    radial coordinate (odd in radial_offset).  Raises OnWireSingularity for
    points within WIRE_GUARD of the filament.  On axis this reduces to
    mu0*N*I*R^2 / (2*(R^2 + x^2)^(3/2)).
    """
    z = np.atleast_1d(np.asarray(axial_offset, dtype=float))
    rho_signed = np.atleast_1d(np.asarray(radial_offset, dtype=float))
    z, rho_signed = np.broadcast_arrays(z, rho_signed)
    rho = np.abs(rho_signed)
    a = float(radius)
    if not (math.isfinite(a) and a > 0):
        raise ValueError(f"radius must be finite and > 0, got {radius}")

    alpha_sq = (a - rho) ** 2 + z**2
    if np.any(alpha_sq < WIRE_GUARD**2):
        raise OnWireSingularity(
            f"field point within {WIRE_GUARD} m of the conductor filament"
        )
    beta_sq = (a + rho) ** 2 + z**2
    m = 4.0 * a * rho / beta_sq
    k_int, e_int = elliptic_ke(m)
    k_int = np.asarray(k_int)
    e_int = np.asarray(e_int)

    pref = MU0 * turns * current / (2.0 * math.pi * np.sqrt(beta_sq))
    b_axial = pref * (k_int + e_int * (a**2 - rho**2 - z**2) / alpha_sq)
    on_axis = rho == 0.0
    safe_rho = np.where(on_axis, 1.0, rho)
    b_radial = (
        pref
        * (z / safe_rho)
        * (-k_int + e_int * (a**2 + rho**2 + z**2) / alpha_sq)
    )
    b_radial = np.where(on_axis, 0.0, b_radial) * np.sign(rho_signed + on_axis)
    if np.ndim(axial_offset) == 0 and np.ndim(radial_offset) == 0:
        return float(b_axial[0]), float(b_radial[0])
    return b_axial, b_radial


@dataclasses.dataclass(frozen=True)
class MapGrid:
    """Symmetric rectangular grid in the x-z plane, always containing (0, 0)."""

    x_half_span: float  # m
    z_half_span: float  # m
    spacing: float  # m

    def __post_init__(self) -> None:
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"spacing must be finite and > 0, got {self.spacing}")
        for name in ("x_half_span", "z_half_span"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    def x_nodes(self) -> NDArray[np.float64]:
        n = int(round(self.x_half_span / self.spacing))
        return self.spacing * np.arange(-n, n + 1)

    def z_nodes(self) -> NDArray[np.float64]:
        n = int(round(self.z_half_span / self.spacing))
        return self.spacing * np.arange(-n, n + 1)


@dataclasses.dataclass(frozen=True, eq=False)
class FieldMap:
    """Sampled axial field component Bx over the x-z plane; bx[ix, iz]."""

    xs: NDArray[np.float64]
    zs: NDArray[np.float64]
    bx: NDArray[np.float64]
    spacing: float

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float)
        zs = np.asarray(self.zs, dtype=float)
        bx = np.asarray(self.bx, dtype=float)
        if bx.shape != (xs.size, zs.size):
            raise ValueError("bx must have shape (len(xs), len(zs))")
        if not np.all(np.isfinite(bx)):
            raise ValueError("field values must be finite")
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"spacing must be finite and > 0, got {self.spacing}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "zs", zs)
        object.__setattr__(self, "bx", bx)

    def center_indices(self) -> tuple[int, int]:
        ix = int(np.argmin(np.abs(self.xs)))
        iz = int(np.argmin(np.abs(self.zs)))
        if abs(self.xs[ix]) > 1e-12 or abs(self.zs[iz]) > 1e-12:
            raise ValueError("map does not contain the center node (0, 0)")
        return ix, iz


def helmholtz_map(geometry: CoilGeometry, grid: MapGrid) -> FieldMap:
    """Superpose the two loops over the grid; stores the axial component Bx."""
    xs = grid.x_nodes()
    zs = grid.z_nodes()
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    bx = np.zeros_like(gx)
    for xc in (-0.5 * geometry.loop_separation, 0.5 * geometry.loop_separation):
        b_ax, _ = loop_field(
            geometry.loop_radius,
            geometry.turns_per_loop,
            geometry.current,
            gx - xc,
            gz,
        )
        bx = bx + b_ax
    return FieldMap(xs=xs, zs=zs, bx=bx, spacing=grid.spacing)


def center_sensitivity(geometry: CoilGeometry) -> float:
    """Axial field at the coil center per unit current [T/A]."""
    total = 0.0
    for xc in (-0.5 * geometry.loop_separation, 0.5 * geometry.loop_separation):
        b_ax, _ = loop_field(geometry.loop_radius, geometry.turns_per_loop, 1.0, -xc, 0.0)
        total += b_ax
    return total


@dataclasses.dataclass(frozen=True)
class HomogeneityRegion:
    """Centered axis-aligned region where |Bx - Bx(0)|/|Bx(0)| <= 1 - level.

    Extents are full side lengths: axial_extent along x, radial_extent
    along z.
    """

    axial_extent: float  # m
    radial_extent: float  # m
    level: float

    def __post_init__(self) -> None:
        if not (0.0 < self.level < 1.0):
            raise ValueError(f"level must be in (0, 1), got {self.level}")
        for name in ("axial_extent", "radial_extent"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def homogeneity_region(field_map: FieldMap, level: float = 0.95) -> HomogeneityRegion:
    """Largest centered rectangle of nodes within the homogeneity level.

    Among all centered axis-aligned node rectangles whose every node
    satisfies the deviation bound, the one with the largest node count is
    returned (ties resolved toward the larger axial extent).
    """
    if not (0.0 < level < 1.0):
        raise ValueError(f"level must be in (0, 1), got {level}")
    ix0, iz0 = field_map.center_indices()
    b0 = field_map.bx[ix0, iz0]
    if abs(b0) < 1e-18:
        raise ZeroCenterField("center field is numerically zero")
    ok = np.abs(field_map.bx - b0) <= (1.0 - level) * abs(b0)

    max_i = min(ix0, field_map.xs.size - 1 - ix0)
    max_j = min(iz0, field_map.zs.size - 1 - iz0)

    def rect_ok(i: int, j: int) -> bool:
        return bool(np.all(ok[ix0 - i:ix0 + i + 1, iz0 - j:iz0 + j + 1]))

    best = (0, 0)
    best_area = -1
    j_cap = max_j
    for i in range(max_i + 1):
        if not rect_ok(i, 0):
            break
        while j_cap > 0 and not rect_ok(i, j_cap):
            j_cap -= 1
        area = (2 * i + 1) * (2 * j_cap + 1)
        if area > best_area or (area == best_area and i > best[0]):
            best_area = area
            best = (i, j_cap)
    spacing = field_map.spacing
    return HomogeneityRegion(
        axial_extent=2.0 * best[0] * spacing,
        radial_extent=2.0 * best[1] * spacing,
        level=level,
    )


def chamber_fit(
    region: HomogeneityRegion,
    chamber_diameter: float,
    chamber_length: float,
    chamber_axis: str = "along_drive_axis",
) -> bool:
    """Whether a centered cylinder fits inside the region extents.

    chamber_axis selects the cylinder orientation: "along_coil_axis" puts
    its length along x, "along_drive_axis" along z.  A zero-size chamber
    fits trivially.
    """
    if chamber_diameter < 0 or chamber_length < 0:
        raise ValueError("chamber dimensions must be >= 0")
    if chamber_axis == "along_coil_axis":
        return (
            chamber_length <= region.axial_extent
            and chamber_diameter <= region.radial_extent
        )
    if chamber_axis == "along_drive_axis":
        return (
            chamber_diameter <= region.axial_extent
            and chamber_length <= region.radial_extent
        )
    raise ValueError(f"unknown chamber_axis {chamber_axis!r}")


def example_geometry() -> CoilGeometry:
    """Shipped illustrative coil: ideal spacing, ~1.76 mT/A at the center.

    The real device geometry behind that operating point is not known; this
    configuration only demonstrates it.
    """
    return CoilGeometry(loop_radius=0.05, loop_separation=0.05, turns_per_loop=98, current=1.0)
