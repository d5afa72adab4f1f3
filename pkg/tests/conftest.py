import numpy as np
import pytest

from mpsdc.physics import DcField, DriveField, ParticleModel, SamplingConfig, SignalTrace, ideal_signal

GRID_FREQUENCIES_HZ = (1000.0, 2000.0, 3000.0, 4000.0, 5000.0)
GRID_AMPLITUDES_MT = (7.5, 10.0, 12.5, 15.0)
GRID_DC_FIELDS_MT = tuple(float(v) for v in range(10))


@pytest.fixture(scope="session")
def particle() -> ParticleModel:
    return ParticleModel()


@pytest.fixture(scope="session")
def sampling() -> SamplingConfig:
    return SamplingConfig(samples_per_period=4096, periods=1)


def make_ideal(
    frequency_hz: float = 1000.0,
    amplitude_mt: float = 10.0,
    dc_mt: float = 0.0,
    spp: int = 4096,
    periods: int = 1,
    particle: ParticleModel | None = None,
) -> SignalTrace:
    return ideal_signal(
        particle or ParticleModel(),
        DriveField(frequency=frequency_hz, amplitude=amplitude_mt * 1e-3),
        DcField(magnitude=dc_mt * 1e-3),
        SamplingConfig(samples_per_period=spp, periods=periods),
    )


def make_tone(frequency_hz: float = 1000.0, spp: int = 4096, periods: int = 1,
              amplitude: float = 1.0) -> SignalTrace:
    theta = 2.0 * np.pi * np.arange(spp) / spp
    samples = np.tile(amplitude * np.sin(theta), periods)
    return SignalTrace(dt=1.0 / (frequency_hz * spp), samples=samples, samples_per_period=spp)
