"""
Tests for the channel simulator.
"""

import numpy as np
import pytest

from csivital.components.pulses import SinusoidPulse
from csivital.core.channel import (
    ChannelSimulator,
    build_placements,
    build_scene,
    dynamic_cfr,
    effective_breath_depth,
    posture_motion,
    quadrature_static_phase,
    synth_displacement,
    synth_ground_truth,
    synthesize_trace,
    total_cfr,
)
from csivital.utils.config_models import NoiseSpec
from csivital.utils.data_models import (
    SPEED_OF_LIGHT,
    DynamicPath,
    Point3,
    Posture,
    Scene,
    StaticPath,
    VitalProfile,
)
from csivital.utils.errors import DomainError

CARRIER = 5.32e9
WAVELENGTH = SPEED_OF_LIGHT / CARRIER


@pytest.fixture
def path():
    return DynamicPath(gain=0.5, base_length=1.25, reflection_point=Point3(0.6, 0.2, 0.0))


def test_dynamic_cfr_at_rest(path):
    expected = 0.5 * np.exp(-2j * np.pi * CARRIER * 1.25 / SPEED_OF_LIGHT)
    assert dynamic_cfr(path, 0.0, CARRIER) == pytest.approx(expected)


def test_half_wavelength_displacement_flips_phase(path):
    """Moving the reflector lambda/2 along the path rotates its phasor by pi."""
    ratio = dynamic_cfr(path, WAVELENGTH / 2, CARRIER) / dynamic_cfr(path, 0.0, CARRIER)
    assert ratio == pytest.approx(-1.0 + 0j, abs=1e-9)


def test_dynamic_cfr_broadcasts(path):
    d = np.linspace(0, 0.01, 7)[:, None]
    f = CARRIER + np.linspace(-1e7, 1e7, 5)[None, :]
    assert dynamic_cfr(path, d, f).shape == (7, 5)


def test_dynamic_cfr_rejects_non_positive_frequency(path):
    with pytest.raises(DomainError):
        dynamic_cfr(path, 0.0, 0.0)


def test_total_cfr_respects_triangle_bound(path):
    static = StaticPath(amplitude=1.0, phase=0.3)
    second = DynamicPath(gain=0.2, base_length=1.4, reflection_point=Point3(0.5, 0.3, 0.0))
    d = np.random.default_rng(1).uniform(-0.01, 0.01, size=1000)
    values = total_cfr(static, [path, second], d, CARRIER)
    assert np.all(np.abs(values) <= 1.0 + 0.5 + 0.2 + 1e-12)


def test_total_cfr_without_dynamic_paths_is_static():
    static = StaticPath(amplitude=0.8, phase=-1.0, attenuation=0.5)
    assert total_cfr(static, [], 0.0, CARRIER) == pytest.approx(static.gain)


def test_amplitude_is_sine_like_across_zones(path):
    """Sweeping the reflected path over three wavelengths gives two extrema per wavelength."""
    static = StaticPath(1.0, quadrature_static_phase(path.base_length, WAVELENGTH))
    d = np.linspace(0.0, 3 * WAVELENGTH, 3000)
    amplitude = np.abs(total_cfr(static, [path], d, CARRIER))
    slope_sign = np.sign(np.diff(amplitude))
    extrema = np.count_nonzero(slope_sign[1:] != slope_sign[:-1])
    assert extrema == 6


def test_posture_motion_directions():
    assert posture_motion(Posture.SUPINE, 0.005).direction == (0.0, 0.0, 1.0)
    assert posture_motion(Posture.PRONE, 0.005).direction == (0.0, 0.0, 1.0)
    assert posture_motion(Posture.LEFT_RECUMBENT, 0.005).direction == (0.0, 1.0, 0.0)
    assert posture_motion(Posture.RIGHT_RECUMBENT, 0.002).amplitude == 0.002


def test_recumbent_breathing_is_shallower():
    profile = VitalProfile(posture=Posture.LEFT_RECUMBENT)
    assert effective_breath_depth(profile, 0.4) == pytest.approx(0.002)
    assert effective_breath_depth(VitalProfile(), 0.4) == pytest.approx(0.005)


def test_synth_displacement_breath_only():
    profile = VitalProfile(heart_amplitude=0.0)
    d = synth_displacement(profile, 20.0, 100.0, SinusoidPulse())
    assert d.shape == (2000,)
    assert np.max(np.abs(d)) == pytest.approx(0.005, rel=1e-3)
    expected = 0.005 * np.sin(2 * np.pi * 0.3 * np.arange(2000) / 100.0)
    np.testing.assert_allclose(d, expected, atol=1e-15)


@pytest.mark.parametrize("duration, rate", [(0.0, 500.0), (-1.0, 500.0), (10.0, 0.0)])
def test_synth_displacement_rejects_bad_inputs(duration, rate):
    with pytest.raises(DomainError):
        synth_displacement(VitalProfile(), duration, rate)


def test_build_scene_from_default_scenario(scene):
    assert scene.n_antennas == 3
    assert [c.name for c in scene.channels] == ["R1", "R2", "R3"]
    assert scene.carrier_freq == pytest.approx(CARRIER)
    for channel in scene.channels:
        (dynamic,) = channel.dynamics
        assert dynamic.base_length >= channel.pair.los_length


def test_build_scene_needs_receivers(scenario):
    with pytest.raises(DomainError):
        build_scene(scenario.model_copy(update={"receivers": []}))


def test_build_placements_scales_recumbent_depth(scenario):
    placements = {p.name: p for p in build_placements(scenario, recumbent_depth_factor=0.4)}
    assert placements["R3"].motion.amplitude == pytest.approx(0.005)
    assert placements["R3-side"].motion.amplitude == pytest.approx(0.002)
    assert placements["R3-side"].motion.direction == (0.0, 1.0, 0.0)


def test_simulator_layout_and_timestamps(simulator):
    trace = simulator.synthesize(VitalProfile(), 2.0, NoiseSpec.off()).trace
    assert trace.values.shape == (1000, 3, 30)
    assert trace.values.dtype == np.complex64
    assert np.all(np.diff(trace.timestamps_us) == 2000)
    assert trace.timestamps_us[0] == 0
    assert trace.subcarrier_spacing == pytest.approx(20e6 / 29)
    assert trace.subcarrier_frequencies.mean() == pytest.approx(CARRIER)


def test_simulator_snr_matches_request(simulator):
    """Signal variance over noise variance, per stream, is within 1 dB of snr_db on 40 s."""
    result = simulator.synthesize(VitalProfile(), 40.0, NoiseSpec(snr_db=20.0, outlier_rate=0.0), seed=4)
    noise = result.trace.values.astype(np.complex128) - result.clean
    moving = np.var(result.clean, axis=0) > 1e-6 * np.mean(np.abs(result.clean) ** 2, axis=0)
    assert moving.any()
    snr = 10 * np.log10(np.var(result.clean, axis=0) / np.var(noise, axis=0))
    assert np.all(np.abs(snr[moving] - 20.0) < 1.0)


def test_static_stream_still_gets_noise(simulator):
    profile = VitalProfile(breath_depth=0.0, heart_amplitude=0.0)
    result = simulator.synthesize(profile, 2.0, NoiseSpec(snr_db=20.0, outlier_rate=0.0), seed=1)
    assert np.all(np.var(result.clean, axis=0) < 1e-20)
    assert np.all(np.std(result.trace.amplitudes(0), axis=0) > 0)


def test_simulator_is_deterministic(simulator):
    noise = NoiseSpec(snr_db=20.0, outlier_rate=0.01)
    first = simulator.synthesize(VitalProfile(), 5.0, noise, seed=11).trace
    second = simulator.synthesize(VitalProfile(), 5.0, noise, seed=11).trace
    other = simulator.synthesize(VitalProfile(), 5.0, noise, seed=12).trace
    assert first.same_as(second)
    assert not first.same_as(other)


def test_outliers_are_positive_spikes(simulator):
    result = simulator.synthesize(VitalProfile(), 10.0, NoiseSpec(snr_db=None, outlier_rate=0.01), seed=2)
    mask = result.outlier_mask
    assert 0.005 < mask.mean() < 0.015
    spiked = np.abs(result.trace.values.astype(np.complex128))
    clean = np.abs(result.clean)
    assert np.all(spiked[mask] > clean[mask])
    np.testing.assert_allclose(spiked[~mask], clean[~mask], rtol=1e-6)


def test_noise_off_gives_clean_trace(simulator):
    result = simulator.synthesize(VitalProfile(), 1.0, NoiseSpec.off())
    np.testing.assert_allclose(result.trace.values, result.clean.astype(np.complex64))
    assert not result.outlier_mask.any()


def test_empty_scene_is_rejected():
    with pytest.raises(DomainError):
        ChannelSimulator(Scene(()))
    with pytest.raises(DomainError):
        synthesize_trace(Scene(()), VitalProfile(), 10.0)


@pytest.mark.parametrize("duration", [0.0, -5.0, 0.001])
def test_synthesize_rejects_bad_duration(simulator, duration):
    with pytest.raises(DomainError):
        simulator.synthesize(VitalProfile(), duration)


def test_synthesize_trace_forwards_options(scene):
    trace = synthesize_trace(scene, VitalProfile(), 1.0, NoiseSpec.off(), sample_rate=100.0, n_subcarriers=4)
    assert trace.values.shape == (100, 3, 4)
    assert trace.sample_rate == 100.0


def test_synth_ground_truth():
    truth = synth_ground_truth(VitalProfile(heart_rate=80.0), 30.0)
    assert len(truth.breath) == 1500
    assert len(truth.pulse) == 30
    assert np.all(truth.pulse.values == 80.0)
    peak = (2 * np.pi * 0.3) ** 2 * 0.005
    assert np.max(np.abs(truth.breath.values)) == pytest.approx(peak, rel=1e-3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"breath_rate": 10.0},
        {"heart_rate": 130.0},
        {"heart_amplitude": 0.006},
        {"breath_depth": -0.001},
    ],
)
def test_vital_profile_validation(kwargs):
    with pytest.raises(DomainError):
        VitalProfile(**kwargs)
