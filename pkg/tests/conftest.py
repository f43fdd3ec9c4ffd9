"""
Configuration file for pytest.

This file adds the project's root directory to the Python path so that
pytest can find the 'csivital' module without needing to install it, and
provides the shared scene and trace fixtures.
"""

import sys
from pathlib import Path

# Add the project root directory to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import pytest  # noqa: E402

from csivital.core.channel import ChannelSimulator, build_scene  # noqa: E402
from csivital.utils.config import default_scenario  # noqa: E402
from csivital.utils.config_models import NoiseSpec  # noqa: E402
from csivital.utils.data_models import VitalProfile  # noqa: E402

PROJECT_ROOT = project_root


@pytest.fixture(scope="session")
def scenario():
    """The built-in three-receiver bench scenario."""
    return default_scenario()


@pytest.fixture(scope="session")
def scene(scenario):
    return build_scene(scenario)


@pytest.fixture(scope="session")
def simulator(scene):
    return ChannelSimulator(scene)


@pytest.fixture(scope="session")
def trace_60s(simulator):
    """60 s at 500 Hz, 18 bpm / 72 bpm, 20 dB SNR, seed 0."""
    return simulator.synthesize(VitalProfile(), 60.0, NoiseSpec(snr_db=20.0), seed=0).trace


@pytest.fixture
def make_trace(simulator):
    """Builds a trace for a given profile, duration and noise."""

    def _make(profile=None, duration=60.0, noise=None, seed=0):
        profile = profile or VitalProfile()
        noise = NoiseSpec(snr_db=20.0) if noise is None else noise
        return simulator.synthesize(profile, duration, noise, seed).trace

    return _make
