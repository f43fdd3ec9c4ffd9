"""
Channel simulator: synthesizes CSI from a static + dynamic path model.

The channel on one receive antenna is H(f, t) = Hs + sum_k h_k exp(-j 2 pi f L_k(t) / c),
where each dynamic path k reflects off the body and its length L_k(t) follows
the breathing and heartbeat displacement d(t) through the Fresnel-zone
geometry. Complex Gaussian noise and impulsive amplitude outliers are added
on top, deterministically for a given seed.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..components.pulses import BasePulse, RaisedCosinePulse
from ..utils.config_models import NoiseSpec, ScenarioConfig, SimulationConfig
from ..utils.data_models import (
    SPEED_OF_LIGHT,
    AntennaPair,
    CsiTrace,
    DynamicPath,
    GroundTruth,
    MotionVector,
    Point3,
    Posture,
    RxChannel,
    Scene,
    StaticPath,
    TruthSeries,
    VitalProfile,
)
from ..utils.errors import DomainError
from .geometry import Placement, motion_coupling

logger = logging.getLogger(__name__)

DEFAULT_RECUMBENT_DEPTH_FACTOR = 0.4
NOISE_CHUNK_FRAMES = 4096
# Noise reference for a stream with no motion, relative to its mean power.
STATIC_NOISE_FLOOR = 1e-6

VERTICAL = (0.0, 0.0, 1.0)
LATERAL = (0.0, 1.0, 0.0)

POSTURE_DIRECTIONS = {
    Posture.SUPINE: VERTICAL,
    Posture.PRONE: VERTICAL,
    Posture.LEFT_RECUMBENT: LATERAL,
    Posture.RIGHT_RECUMBENT: LATERAL,
}


def posture_motion(posture: Posture, amplitude: float) -> MotionVector:
    """Breathing motion for a sleeping posture: vertical on the back or front, lateral on a side."""
    return MotionVector(POSTURE_DIRECTIONS[Posture(posture)], amplitude)


def effective_breath_depth(profile: VitalProfile, recumbent_depth_factor: float) -> float:
    if profile.posture.is_recumbent:
        return profile.breath_depth * recumbent_depth_factor
    return profile.breath_depth


def _sample_count(duration: float, rate: float) -> int:
    if not (math.isfinite(duration) and duration > 0):
        raise DomainError(f"Duration must be positive, got {duration}")
    if not (math.isfinite(rate) and rate > 0):
        raise DomainError(f"Sample rate must be positive, got {rate}")
    return int(math.floor(duration * rate + 1e-9))


def synth_displacement(
    profile: VitalProfile,
    duration: float,
    rate: float,
    pulse: Optional[BasePulse] = None,
    recumbent_depth_factor: float = DEFAULT_RECUMBENT_DEPTH_FACTOR,
) -> np.ndarray:
    """
    Body displacement d(t) in meters, sampled at `rate` for `duration` seconds.

    d(t) = depth * sin(2 pi f_b t) + heart_amplitude * p(2 pi f_h t), where p
    is the pulse shape and depth is the breath depth, reduced by
    `recumbent_depth_factor` for side-lying postures.

    Raises:
        DomainError: If duration or rate is not positive.
    """
    n = _sample_count(duration, rate)
    pulse = pulse or RaisedCosinePulse()
    t = np.arange(n) / rate
    depth = effective_breath_depth(profile, recumbent_depth_factor)
    breath = depth * np.sin(2.0 * np.pi * profile.breath_freq * t)
    heart = profile.heart_amplitude * pulse(2.0 * np.pi * profile.heart_freq * t)
    return breath + heart


def dynamic_cfr(path: DynamicPath, displacement, f):
    """
    CFR contribution of one dynamic path.

    `displacement` and `f` may be scalars or broadcastable arrays.
    Returns h * exp(-j 2 pi (base_length + coupling * displacement) / wavelength).
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise DomainError("Frequencies must be positive.")
    length = path.base_length + path.coupling * np.asarray(displacement, dtype=float)
    value = path.effective_gain * np.exp(-2j * np.pi * f * length / SPEED_OF_LIGHT)
    return value if np.ndim(value) else complex(value)


def total_cfr(static: StaticPath, dynamics: Sequence[DynamicPath], displacement, f):
    """Static gain plus every dynamic contribution."""
    total = static.gain
    for path in dynamics:
        total = total + dynamic_cfr(path, displacement, f)
    return total


def quadrature_static_phase(base_length: float, wavelength: float) -> float:
    """Static phase 90 degrees ahead of a resting dynamic path of the given length."""
    phase = -2.0 * np.pi * base_length / wavelength + np.pi / 2.0
    return float(np.angle(np.exp(1j * phase)))


def build_scene(scenario: ScenarioConfig) -> Scene:
    """
    One RxChannel per receiver, each with a single path reflected at the body point.

    Raises:
        DomainError: If the scenario has no receivers or invalid geometry.
    """
    if not scenario.receivers:
        raise DomainError("Scenario defines no receivers.")
    wavelength = scenario.resolved_wavelength
    tx = Point3.from_sequence(scenario.transmitter)
    body = Point3.from_sequence(scenario.body_point)

    channels = []
    for receiver in scenario.receivers:
        pair = AntennaPair(tx, Point3.from_sequence(receiver.position), wavelength)
        base_length = float(
            np.linalg.norm(body.as_array() - tx.as_array())
            + np.linalg.norm(body.as_array() - pair.rx.as_array())
        )
        path = DynamicPath(
            gain=receiver.reflection_gain,
            base_length=base_length,
            reflection_point=body,
            attenuation=receiver.reflection_attenuation,
        )
        if receiver.static.phase == "quadrature":
            phase = quadrature_static_phase(base_length, wavelength)
        else:
            phase = float(receiver.static.phase)
        static = StaticPath(receiver.static.amplitude, phase, receiver.static.attenuation)
        channels.append(RxChannel(receiver.name, pair, static, (path,)))
        logger.debug(f"Receiver '{receiver.name}': reflected path {base_length:.4f} m")

    return Scene(tuple(channels), carrier_freq=SPEED_OF_LIGHT / wavelength)


def build_placements(
    scenario: ScenarioConfig,
    recumbent_depth_factor: float = DEFAULT_RECUMBENT_DEPTH_FACTOR,
) -> List[Placement]:
    """Planner candidates of a scenario, with motion defaulting to the scenario's breath depth."""
    wavelength = scenario.resolved_wavelength
    placements = []
    for candidate in scenario.candidates:
        amplitude = candidate.amplitude
        if amplitude is None:
            amplitude = scenario.profile.breath_depth
            if candidate.posture.is_recumbent:
                amplitude *= recumbent_depth_factor
        if candidate.motion_direction is not None:
            motion = MotionVector.along(candidate.motion_direction, amplitude)
        else:
            motion = posture_motion(candidate.posture, amplitude)
        pair = AntennaPair(
            Point3.from_sequence(candidate.tx), Point3.from_sequence(candidate.rx), wavelength
        )
        placements.append(
            Placement(candidate.name, pair, Point3.from_sequence(candidate.body_point), motion)
        )
    return placements


@dataclass(frozen=True)
class SynthesisResult:
    """
    A synthesized trace with the simulator's internals kept for checking.

    Attributes:
        trace (CsiTrace): The noisy trace, as a receiver would record it.
        clean (np.ndarray): Noise-free CFR, shape (n, antennas, subcarriers), complex128.
        outlier_mask (np.ndarray): True where an outlier spike was injected.
        displacement (np.ndarray): Body displacement d(t) in meters.
    """

    trace: CsiTrace
    clean: np.ndarray
    outlier_mask: np.ndarray
    displacement: np.ndarray


class ChannelSimulator:
    """Synthesizes CSI traces for a scene."""

    def __init__(
        self,
        scene: Scene,
        sample_rate: float = 500.0,
        n_subcarriers: int = 30,
        bandwidth: float = 20e6,
        pulse: Optional[BasePulse] = None,
        recumbent_depth_factor: float = DEFAULT_RECUMBENT_DEPTH_FACTOR,
    ):
        if scene.n_antennas == 0:
            raise DomainError("Scene has no receive antennas.")
        if not sample_rate > 0:
            raise DomainError(f"Sample rate must be positive, got {sample_rate}")
        if n_subcarriers < 1:
            raise DomainError(f"Need at least one subcarrier, got {n_subcarriers}")
        if not 0.0 <= recumbent_depth_factor <= 1.0:
            raise DomainError("recumbent_depth_factor must be in [0, 1]")
        self.scene = scene
        self.sample_rate = sample_rate
        self.n_subcarriers = n_subcarriers
        self.bandwidth = bandwidth
        self.pulse = pulse or RaisedCosinePulse()
        self.recumbent_depth_factor = recumbent_depth_factor

    @classmethod
    def from_config(
        cls, scene: Scene, simulation: SimulationConfig, pulse: Optional[BasePulse] = None
    ) -> "ChannelSimulator":
        return cls(
            scene,
            sample_rate=simulation.sample_rate,
            n_subcarriers=simulation.n_subcarriers,
            bandwidth=simulation.bandwidth,
            pulse=pulse,
            recumbent_depth_factor=simulation.recumbent_depth_factor,
        )

    @property
    def subcarrier_spacing(self) -> float:
        if self.n_subcarriers == 1:
            return 0.0
        return self.bandwidth / (self.n_subcarriers - 1)

    @property
    def subcarrier_frequencies(self) -> np.ndarray:
        offsets = np.arange(self.n_subcarriers) - (self.n_subcarriers - 1) / 2.0
        return self.scene.carrier_freq + offsets * self.subcarrier_spacing

    def _coupled(self, channel: RxChannel, direction: Tuple[float, float, float]) -> List[DynamicPath]:
        return [
            replace(path, coupling=motion_coupling(channel.pair, path.reflection_point, direction))
            for path in channel.dynamics
        ]

    def clean_cfr(self, displacement: np.ndarray, direction: Tuple[float, float, float]) -> np.ndarray:
        """Noise-free CFR for every frame, antenna and subcarrier, complex128."""
        freqs = self.subcarrier_frequencies[None, :]
        d = np.asarray(displacement, dtype=float)[:, None]
        cfr = np.empty((d.shape[0], self.scene.n_antennas, self.n_subcarriers), dtype=np.complex128)
        for a, channel in enumerate(self.scene.channels):
            cfr[:, a, :] = np.broadcast_to(
                total_cfr(channel.static, self._coupled(channel, direction), d, freqs),
                (d.shape[0], self.n_subcarriers),
            )
        return cfr

    def _gaussian_noise(self, clean: np.ndarray, snr_db: float, seed_seq: np.random.SeedSequence) -> np.ndarray:
        # SNR holds per (antenna, subcarrier) stream: variance of H over time over noise variance.
        power = np.var(clean, axis=0)
        floor = STATIC_NOISE_FLOOR * np.mean(np.abs(clean) ** 2, axis=0)
        power = np.where(power > floor, power, floor)
        sigma = np.sqrt(power / 10.0 ** (snr_db / 10.0) / 2.0)
        n = clean.shape[0]
        starts = range(0, n, NOISE_CHUNK_FRAMES)
        noise = np.empty_like(clean)
        for start, child in zip(starts, seed_seq.spawn(len(starts))):
            rng = np.random.default_rng(child)
            stop = min(start + NOISE_CHUNK_FRAMES, n)
            shape = (stop - start,) + clean.shape[1:]
            noise[start:stop] = sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        return noise

    def _inject_outliers(
        self, values: np.ndarray, noise: NoiseSpec, seed_seq: np.random.SeedSequence
    ) -> Tuple[np.ndarray, np.ndarray]:
        mask = np.zeros(values.shape, dtype=bool)
        if noise.outlier_rate == 0 or noise.outlier_magnitude == 0:
            return values, mask
        rng = np.random.default_rng(seed_seq)
        mask = rng.random(values.shape) < noise.outlier_rate
        amplitude = np.abs(values)
        scale = np.maximum(amplitude.std(axis=0), 1e-3 * amplitude.mean(axis=0))
        spiked = (amplitude + noise.outlier_magnitude * scale) * np.exp(1j * np.angle(values))
        return np.where(mask, spiked, values), mask

    def synthesize(
        self,
        profile: VitalProfile,
        duration: float,
        noise: Optional[NoiseSpec] = None,
        seed: int = 0,
    ) -> SynthesisResult:
        """
        Synthesizes a trace.

        Frame i is stamped round(i * 1e6 / sample_rate) microseconds. The
        result is bit-identical for the same scene, profile, noise and seed.

        Raises:
            DomainError: On a non-positive duration or one shorter than a frame.
        """
        noise = noise or NoiseSpec()
        n = _sample_count(duration, self.sample_rate)
        if n < 1:
            raise DomainError(f"Duration {duration}s is shorter than one frame.")

        displacement = synth_displacement(
            profile, duration, self.sample_rate, self.pulse, self.recumbent_depth_factor
        )
        clean = self.clean_cfr(displacement, POSTURE_DIRECTIONS[profile.posture])

        noise_seq, outlier_seq = np.random.SeedSequence(seed).spawn(2)
        values = clean
        if noise.snr_db is not None:
            values = clean + self._gaussian_noise(clean, noise.snr_db, noise_seq)
        values, outlier_mask = self._inject_outliers(values, noise, outlier_seq)

        timestamps_us = np.round(np.arange(n) * 1e6 / self.sample_rate).astype(np.int64)
        trace = CsiTrace(
            sample_rate=self.sample_rate,
            carrier_freq=self.scene.carrier_freq,
            subcarrier_spacing=self.subcarrier_spacing,
            timestamps_us=timestamps_us,
            values=values.astype(np.complex64),
        )
        logger.info(
            f"Synthesized {n} frames ({duration}s) for {self.scene.n_antennas} antennas, "
            f"breath {profile.breath_rate} bpm, heart {profile.heart_rate} bpm, seed {seed}"
        )
        return SynthesisResult(trace, clean, outlier_mask, displacement)


def synthesize_trace(
    scene: Scene,
    profile: VitalProfile,
    duration: float,
    noise: Optional[NoiseSpec] = None,
    seed: int = 0,
    **simulator_options,
) -> CsiTrace:
    """Synthesizes a trace with a ChannelSimulator built from `simulator_options`."""
    if scene.n_antennas == 0:
        raise DomainError("Scene has no receive antennas.")
    simulator = ChannelSimulator(scene, **simulator_options)
    return simulator.synthesize(profile, duration, noise, seed).trace


def synth_ground_truth(
    profile: VitalProfile,
    duration: float,
    accel_rate: float = 50.0,
    pulse_rate: float = 1.0,
    recumbent_depth_factor: float = DEFAULT_RECUMBENT_DEPTH_FACTOR,
) -> GroundTruth:
    """
    Reference sensor readings for a synthesized session.

    The breath series is the abdomen acceleration of the breathing motion
    (arbitrary units); the pulse series holds oximeter-style bpm readings.
    """
    n_accel = _sample_count(duration, accel_rate)
    t = np.arange(n_accel) / accel_rate
    omega = 2.0 * np.pi * profile.breath_freq
    depth = effective_breath_depth(profile, recumbent_depth_factor)
    accel = -(omega**2) * depth * np.sin(omega * t)

    n_pulse = _sample_count(duration, pulse_rate)
    pulse_times = np.arange(n_pulse) / pulse_rate
    return GroundTruth(
        breath=TruthSeries(t, accel),
        pulse=TruthSeries(pulse_times, np.full(n_pulse, float(profile.heart_rate))),
    )
