"""TOML run configuration: parsing, validation, unit conversion.

Every physical quantity carries its unit in the key name (amplitude_mT,
tau_us, loop_radius_mm, ...) and is converted to SI on load.  Unknown keys
are rejected so typos cannot be silently ignored.
"""

from __future__ import annotations

import dataclasses

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from .coilfield import CoilGeometry, MapGrid
from .physics import DcField, DriveField, ParticleModel, SamplingConfig
from .sweep import SweepPlan, TauProfile


class ParseError(ValueError):
    """The document is not valid TOML; the message carries the location."""


class ValidationError(ValueError):
    """A value violates a domain invariant; the message names key and rule."""


@dataclasses.dataclass(frozen=True)
class ChamberSpec:
    diameter: float  # m
    length: float  # m
    axis: str

    def __post_init__(self) -> None:
        if self.diameter <= 0 or self.length <= 0:
            raise ValueError("chamber dimensions must be > 0")
        if self.axis not in ("along_coil_axis", "along_drive_axis"):
            raise ValueError(f"chamber axis must name a known orientation, got {self.axis!r}")


@dataclasses.dataclass(frozen=True)
class CoilConfig:
    geometry: CoilGeometry
    grid: MapGrid
    homogeneity_level: float
    chamber: ChamberSpec | None


@dataclasses.dataclass(frozen=True)
class OutputPaths:
    signal_csv: str | None = None
    results_csv: str | None = None
    summary_csv: str | None = None
    plots_dir: str | None = None
    fieldmap_csv: str | None = None
    fieldmap_svg: str | None = None


@dataclasses.dataclass(frozen=True)
class RunConfig:
    particle: ParticleModel
    sampling: SamplingConfig
    drive: DriveField | None
    dc: DcField | None
    relaxation_tau_s: float | None
    sweep_plan: SweepPlan | None
    sweep_threads: int | None
    coil: CoilConfig | None
    output: OutputPaths


class _Section:
    """Typed key extraction from one TOML table, tracking unknown keys."""

    def __init__(self, name: str, data: dict):
        if not isinstance(data, dict):
            raise ValidationError(f"[{name}] must be a table")
        self.name = name
        self.data = dict(data)

    def _pop(self, key: str, required: bool, default):
        if key in self.data:
            return self.data.pop(key)
        if required:
            raise ValidationError(f"[{self.name}] missing required key {key!r}")
        return default

    def number(self, key: str, required: bool = True, default=None) -> float | None:
        value = self._pop(key, required, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"[{self.name}] {key} must be a number, got {value!r}")
        return float(value)

    def integer(self, key: str, required: bool = True, default=None) -> int | None:
        value = self._pop(key, required, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"[{self.name}] {key} must be an integer, got {value!r}")
        return value

    def string(self, key: str, required: bool = True, default=None) -> str | None:
        value = self._pop(key, required, default)
        if value is None:
            return None
        if not isinstance(value, str):
            raise ValidationError(f"[{self.name}] {key} must be a string, got {value!r}")
        return value

    def number_list(self, key: str, required: bool = True) -> tuple[float, ...] | None:
        value = self._pop(key, required, None)
        if value is None:
            return None
        if not isinstance(value, list) or not value:
            raise ValidationError(f"[{self.name}] {key} must be a non-empty list of numbers")
        out = []
        for i, item in enumerate(value):
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ValidationError(f"[{self.name}] {key}[{i}] must be a number, got {item!r}")
            out.append(float(item))
        return tuple(out)

    def subtable(self, key: str, required: bool = True) -> dict | None:
        value = self._pop(key, required, None)
        if value is None:
            return None
        if not isinstance(value, dict):
            raise ValidationError(f"[{self.name}] {key} must be a table")
        return value

    def finish(self) -> None:
        if self.data:
            unknown = ", ".join(sorted(self.data))
            raise ValidationError(f"[{self.name}] unknown key(s): {unknown}")


def _build(section: str, factory, /, **kwargs):
    """Run a domain constructor, rewriting its ValueError with the section path."""
    try:
        return factory(**kwargs)
    except ValueError as exc:
        raise ValidationError(f"[{section}] {exc}") from exc


def _parse_particle(data: dict) -> ParticleModel:
    sec = _Section("particle", data)
    diameter = sec.number("core_diameter_nm")
    msat = sec.number("saturation_magnetization_kA_m")
    temperature = sec.number("temperature_K")
    sec.finish()
    return _build(
        "particle",
        ParticleModel,
        core_diameter=diameter * 1e-9,
        saturation_magnetization=msat * 1e3,
        temperature=temperature,
    )


def _parse_sampling(data: dict) -> SamplingConfig:
    sec = _Section("sampling", data)
    spp = sec.integer("samples_per_period")
    periods = sec.integer("periods", required=False, default=1)
    sec.finish()
    return _build("sampling", SamplingConfig, samples_per_period=spp, periods=periods)


def _parse_tau_profile(data: dict) -> TauProfile:
    sec = _Section("sweep.tau_profile", data)
    kind = sec.string("kind")
    if kind == "constant":
        tau_us = sec.number("tau_us")
        sec.finish()
        return _build("sweep.tau_profile", TauProfile.constant, tau=tau_us * 1e-6)
    if kind == "table":
        fields = sec.number_list("dc_mT")
        taus = sec.number_list("tau_us")
        sec.finish()
        return _build(
            "sweep.tau_profile",
            TauProfile.from_table,
            fields=[v * 1e-3 for v in fields],
            taus=[v * 1e-6 for v in taus],
        )
    if kind == "dip":
        tau0 = sec.number("tau0_us")
        depth = sec.number("depth")
        center = sec.number("center_mT")
        width = sec.number("width_mT")
        rise = sec.number("rise_us_per_mT")
        sec.finish()
        return _build(
            "sweep.tau_profile",
            TauProfile.dip,
            tau0=tau0 * 1e-6,
            depth=depth,
            dip_center=center * 1e-3,
            dip_width=width * 1e-3,
            rise_rate=rise * 1e-6 / 1e-3,
        )
    raise ValidationError(
        f"[sweep.tau_profile] kind must be one of constant, table, dip; got {kind!r}"
    )


def _parse_sweep(
    data: dict, particle: ParticleModel, sampling: SamplingConfig
) -> tuple[SweepPlan, int | None]:
    sec = _Section("sweep", data)
    frequencies = sec.number_list("frequencies_Hz")
    amplitudes = sec.number_list("amplitudes_mT")
    dc_fields = sec.number_list("dc_fields_mT")
    repetitions = sec.integer("repetitions")
    master_seed = sec.integer("master_seed")
    snr_db = sec.number("snr_db", required=False)
    threads = sec.integer("threads", required=False)
    profile_data = sec.subtable("tau_profile")
    sec.finish()
    if threads is not None and threads < 1:
        raise ValidationError(f"[sweep] threads must be >= 1, got {threads}")
    plan = _build(
        "sweep",
        SweepPlan,
        frequencies_hz=frequencies,
        amplitudes_mt=amplitudes,
        dc_fields_mt=dc_fields,
        repetitions=repetitions,
        tau_profile=_parse_tau_profile(profile_data),
        particle=particle,
        sampling=sampling,
        master_seed=master_seed,
        snr_db=snr_db,
    )
    return plan, threads


def _parse_coil(data: dict) -> CoilConfig:
    sec = _Section("coil", data)
    radius = sec.number("loop_radius_mm")
    separation = sec.number("loop_separation_mm")
    turns = sec.integer("turns_per_loop")
    current = sec.number("current_A")
    level = sec.number("homogeneity_level", required=False, default=0.95)
    grid_data = sec.subtable("grid")
    chamber_data = sec.subtable("chamber", required=False)
    sec.finish()

    geometry = _build(
        "coil",
        CoilGeometry,
        loop_radius=radius * 1e-3,
        loop_separation=separation * 1e-3,
        turns_per_loop=turns,
        current=current,
    )
    gsec = _Section("coil.grid", grid_data)
    grid = _build(
        "coil.grid",
        MapGrid,
        x_half_span=gsec.number("x_half_span_mm") * 1e-3,
        z_half_span=gsec.number("z_half_span_mm") * 1e-3,
        spacing=gsec.number("spacing_mm") * 1e-3,
    )
    gsec.finish()
    if not (0.0 < level < 1.0):
        raise ValidationError(f"[coil] homogeneity_level must be in (0, 1), got {level}")

    chamber = None
    if chamber_data is not None:
        csec = _Section("coil.chamber", chamber_data)
        chamber = _build(
            "coil.chamber",
            ChamberSpec,
            diameter=csec.number("diameter_mm") * 1e-3,
            length=csec.number("length_mm") * 1e-3,
            axis=csec.string("axis", required=False, default="along_drive_axis"),
        )
        csec.finish()
    return CoilConfig(geometry=geometry, grid=grid, homogeneity_level=level, chamber=chamber)


def _parse_output(data: dict) -> OutputPaths:
    sec = _Section("output", data)
    paths = {
        name: sec.string(name, required=False)
        for name in (
            "signal_csv",
            "results_csv",
            "summary_csv",
            "plots_dir",
            "fieldmap_csv",
            "fieldmap_svg",
        )
    }
    sec.finish()
    return OutputPaths(**paths)


_KNOWN_SECTIONS = ("particle", "sampling", "drive", "dc", "relaxation", "sweep", "coil", "output")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises ParseError for malformed TOML (with the decoder's line/column
    message) and ValidationError for unknown keys or invariant violations.
    """
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML: {exc}") from exc
    if not data:
        raise ValidationError("configuration is empty; required sections are missing")
    unknown = sorted(set(data) - set(_KNOWN_SECTIONS))
    if unknown:
        raise ValidationError(f"unknown section(s): {', '.join(unknown)}")

    particle = (
        _parse_particle(data["particle"]) if "particle" in data else ParticleModel()
    )
    sampling = (
        _parse_sampling(data["sampling"]) if "sampling" in data else SamplingConfig()
    )

    drive = None
    if "drive" in data:
        sec = _Section("drive", data["drive"])
        frequency = sec.number("frequency_Hz")
        amplitude = sec.number("amplitude_mT")
        sec.finish()
        drive = _build("drive", DriveField, frequency=frequency, amplitude=amplitude * 1e-3)

    dc = None
    if "dc" in data:
        sec = _Section("dc", data["dc"])
        field = sec.number("field_mT")
        sec.finish()
        dc = _build("dc", DcField, magnitude=field * 1e-3)

    relaxation_tau_s = None
    if "relaxation" in data:
        sec = _Section("relaxation", data["relaxation"])
        tau_us = sec.number("tau_us")
        sec.finish()
        if tau_us < 0:
            raise ValidationError(f"[relaxation] tau_us must be >= 0, got {tau_us}")
        relaxation_tau_s = tau_us * 1e-6

    sweep_plan, sweep_threads = (None, None)
    if "sweep" in data:
        sweep_plan, sweep_threads = _parse_sweep(data["sweep"], particle, sampling)

    coil = _parse_coil(data["coil"]) if "coil" in data else None
    output = _parse_output(data["output"]) if "output" in data else OutputPaths()

    return RunConfig(
        particle=particle,
        sampling=sampling,
        drive=drive,
        dc=dc,
        relaxation_tau_s=relaxation_tau_s,
        sweep_plan=sweep_plan,
        sweep_threads=sweep_threads,
        coil=coil,
        output=output,
    )
