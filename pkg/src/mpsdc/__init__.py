"""Magnetic-nanoparticle spectrometer simulation with an orthogonal DC bias coil.

Modules:
  physics     Langevin signal synthesis (drive field along z, DC bias along x)
  relaxation  first-order exponential relaxation, two realizations
  tauest      time-constant estimation from half-cycle mirror symmetry
  coilfield   two-loop bias coil maps, sensitivity, homogeneity region
  sweep       seeded experiment grids with RMS / pulse-shape / tau metrics
  config      TOML run configuration
  sigio       deterministic CSV emitters and readers
  svgplot     dependency-free SVG line plots and heatmaps
  cli         command-line entry points
"""

from .physics import (
    BOLTZMANN,
    DcField,
    DriveField,
    ParticleModel,
    SamplingConfig,
    SignalTrace,
    dlangevin,
    field_at,
    ideal_signal,
    langevin,
    magnetization_z,
)
from .relaxation import RelaxationKernel, apply_relaxation, apply_relaxation_recursive
from .tauest import (
    AllBinsExcluded,
    HalfCyclePair,
    TauBin,
    TauEstimate,
    aggregate_tau,
    estimate_tau,
    extract_half_cycles,
    half_cycle_spectra,
    mean_pair,
    tau_spectrum,
)
from .coilfield import (
    MU0,
    CoilGeometry,
    FieldMap,
    HomogeneityRegion,
    MapGrid,
    OnWireSingularity,
    ZeroCenterField,
    center_sensitivity,
    chamber_fit,
    elliptic_e,
    elliptic_ke,
    example_geometry,
    helmholtz_map,
    homogeneity_region,
    loop_field,
)
from .sweep import (
    NO_COIL_LABEL,
    NoPeak,
    SummaryRow,
    SweepPlan,
    SweepRecord,
    TauProfile,
    add_noise,
    default_plan,
    derive_seed,
    peak_fwhm,
    rms,
    run_sweep,
    summarize,
)

__version__ = "0.1.0"
