"""
Core data models for csivital.

This module defines the value types passed between the geometry, channel
simulation, signal processing and streaming layers. Configuration-like
types (bands, pipeline and stream settings) live in `config_models`.
"""

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class Point3:
    """A position in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not _finite(self.x, self.y, self.z):
            raise DomainError(f"Point coordinates must be finite, got {self}")

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "Point3":
        if len(values) != 3:
            raise DomainError(f"Expected 3 coordinates, got {len(values)}")
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class AntennaPair:
    """
    A transmit/receive antenna pair and the carrier wavelength.

    Attributes:
        tx (Point3): Transmitting antenna position.
        rx (Point3): Receiving antenna position.
        wavelength (float): Carrier wavelength in meters.
    """

    tx: Point3
    rx: Point3
    wavelength: float

    def __post_init__(self):
        if not (math.isfinite(self.wavelength) and self.wavelength > 0):
            raise DomainError(f"Wavelength must be positive, got {self.wavelength}")
        if self.los_length <= 0:
            raise DomainError("Transmitter and receiver must not coincide.")

    @classmethod
    def from_frequency(cls, tx: Point3, rx: Point3, carrier_freq: float) -> "AntennaPair":
        if carrier_freq <= 0:
            raise DomainError(f"Carrier frequency must be positive, got {carrier_freq}")
        return cls(tx=tx, rx=rx, wavelength=SPEED_OF_LIGHT / carrier_freq)

    @property
    def los_length(self) -> float:
        return float(np.linalg.norm(self.rx.as_array() - self.tx.as_array()))


@dataclass(frozen=True)
class MotionVector:
    """Body motion: a unit direction and an amplitude in meters."""

    direction: Tuple[float, float, float]
    amplitude: float

    def __post_init__(self):
        norm = float(np.linalg.norm(self.direction))
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise DomainError(f"Motion direction must be a unit vector, |d|={norm}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise DomainError(f"Motion amplitude must be >= 0, got {self.amplitude}")

    @classmethod
    def along(cls, vector: Sequence[float], amplitude: float) -> "MotionVector":
        """Builds a motion vector by normalising an arbitrary direction."""
        v = np.asarray(vector, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0 or not np.isfinite(norm):
            raise DomainError(f"Cannot normalise direction {tuple(v)}")
        unit = v / norm
        return cls(direction=(float(unit[0]), float(unit[1]), float(unit[2])), amplitude=amplitude)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.direction, dtype=float)


class Posture(str, Enum):
    SUPINE = "supine"
    PRONE = "prone"
    LEFT_RECUMBENT = "left-recumbent"
    RIGHT_RECUMBENT = "right-recumbent"

    @property
    def is_recumbent(self) -> bool:
        return self in (Posture.LEFT_RECUMBENT, Posture.RIGHT_RECUMBENT)


@dataclass(frozen=True)
class StaticPath:
    """The static part of the channel (Hs), with a scalar attenuation knob."""

    amplitude: float
    phase: float = 0.0
    attenuation: float = 1.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise DomainError(f"Static amplitude must be >= 0, got {self.amplitude}")
        if not 0.0 <= self.attenuation <= 1.0:
            raise DomainError(f"Attenuation must be in [0, 1], got {self.attenuation}")

    @property
    def gain(self) -> complex:
        return complex(self.amplitude * self.attenuation * np.exp(1j * self.phase))


@dataclass(frozen=True)
class DynamicPath:
    """
    A propagation path reflected off the moving body.

    Attributes:
        gain (float): Path gain magnitude h_k.
        base_length (float): Path length at rest, in meters.
        reflection_point (Point3): Where the path touches the body.
        coupling (float): Signed path-length change per meter of body motion.
        attenuation (float): Scalar attenuation in [0, 1].
    """

    gain: float
    base_length: float
    reflection_point: Point3
    coupling: float = 1.0
    attenuation: float = 1.0

    def __post_init__(self):
        if self.gain < 0:
            raise DomainError(f"Dynamic path gain must be >= 0, got {self.gain}")
        if self.base_length <= 0:
            raise DomainError(f"Base path length must be positive, got {self.base_length}")
        if not 0.0 <= self.attenuation <= 1.0:
            raise DomainError(f"Attenuation must be in [0, 1], got {self.attenuation}")

    @property
    def effective_gain(self) -> float:
        return self.gain * self.attenuation


@dataclass(frozen=True)
class RxChannel:
    """Everything the simulator needs for one receive antenna."""

    name: str
    pair: AntennaPair
    static: StaticPath
    dynamics: Tuple[DynamicPath, ...] = ()

    def __post_init__(self):
        for path in self.dynamics:
            if path.base_length < self.pair.los_length - 1e-12:
                raise DomainError(
                    f"Dynamic path on '{self.name}' is shorter than the direct path "
                    f"({path.base_length} < {self.pair.los_length})"
                )


@dataclass(frozen=True)
class Scene:
    channels: Tuple[RxChannel, ...]
    carrier_freq: float = 5.32e9

    @property
    def n_antennas(self) -> int:
        return len(self.channels)


@dataclass(frozen=True)
class VitalProfile:
    """
    Parameters of the synthetic breathing/heartbeat motion.

    Rates are in breaths or beats per minute, depths in meters.
    """

    breath_rate: float = 18.0
    breath_depth: float = 0.005
    heart_rate: float = 72.0
    heart_amplitude: float = 0.0005
    posture: Posture = Posture.SUPINE

    def __post_init__(self):
        if not 15.0 <= self.breath_rate <= 30.0:
            raise DomainError(f"Breath rate must be in [15, 30] bpm, got {self.breath_rate}")
        if not 60.0 <= self.heart_rate <= 120.0:
            raise DomainError(f"Heart rate must be in [60, 120] bpm, got {self.heart_rate}")
        if self.breath_depth < 0 or self.heart_amplitude < 0:
            raise DomainError("Motion depths must be >= 0.")
        if self.heart_amplitude > 0 and self.heart_amplitude >= self.breath_depth:
            raise DomainError(
                f"Heart amplitude ({self.heart_amplitude}) must be smaller than "
                f"breath depth ({self.breath_depth})"
            )

    @property
    def breath_freq(self) -> float:
        return self.breath_rate / 60.0

    @property
    def heart_freq(self) -> float:
        return self.heart_rate / 60.0


@dataclass(frozen=True)
class CsiFrame:
    timestamp_us: int
    values: np.ndarray  # (n_antennas, n_subcarriers), complex64


@dataclass
class CsiTrace:
    """
    Timestamped CSI frames at a fixed sample rate.

    Attributes:
        sample_rate (float): Frames per second.
        carrier_freq (float): Center frequency in Hz.
        subcarrier_spacing (float): Spacing between subcarriers in Hz.
        timestamps_us (np.ndarray): Frame times in integer microseconds, shape (n,).
        values (np.ndarray): Complex CSI, shape (n, n_antennas, n_subcarriers), complex64.
    """

    sample_rate: float
    carrier_freq: float
    subcarrier_spacing: float
    timestamps_us: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.timestamps_us = np.asarray(self.timestamps_us, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.complex64)
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise DomainError(f"Sample rate must be positive, got {self.sample_rate}")
        if self.values.ndim != 3:
            raise DomainError(f"CSI values must be 3-D, got shape {self.values.shape}")
        if self.values.shape[1] < 1 or self.values.shape[2] < 1:
            raise DomainError("A trace needs at least one antenna and one subcarrier.")
        if self.timestamps_us.shape != (self.values.shape[0],):
            raise DomainError("Timestamp count does not match frame count.")
        if self.n_frames > 1:
            steps = np.diff(self.timestamps_us)
            if np.any(steps <= 0):
                bad = int(np.argmax(steps <= 0)) + 1
                raise DomainError(f"Timestamps must be strictly increasing (frame {bad}).")
            nominal = 1e6 / self.sample_rate
            if np.any(np.abs(steps - nominal) > 0.01 * nominal):
                raise DomainError("Frame spacing deviates from 1/sample_rate by more than 1%.")

    @classmethod
    def from_frames(
        cls,
        sample_rate: float,
        carrier_freq: float,
        subcarrier_spacing: float,
        timestamps_us: Sequence[int],
        values: np.ndarray,
    ) -> "CsiTrace":
        return cls(sample_rate, carrier_freq, subcarrier_spacing, np.asarray(timestamps_us), values)

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_antennas(self) -> int:
        return int(self.values.shape[1])

    @property
    def n_subcarriers(self) -> int:
        return int(self.values.shape[2])

    @property
    def timestamps(self) -> np.ndarray:
        return self.timestamps_us / 1e6

    @property
    def duration(self) -> float:
        return self.n_frames / self.sample_rate

    @property
    def subcarrier_frequencies(self) -> np.ndarray:
        offsets = np.arange(self.n_subcarriers) - (self.n_subcarriers - 1) / 2.0
        return self.carrier_freq + offsets * self.subcarrier_spacing

    def amplitudes(self, antenna: int) -> np.ndarray:
        """Amplitude |H| of every subcarrier on one antenna, shape (n, n_subcarriers)."""
        if not 0 <= antenna < self.n_antennas:
            raise DomainError(f"Antenna {antenna} out of range (0..{self.n_antennas - 1})")
        return np.abs(self.values[:, antenna, :]).astype(np.float64)

    def slice(self, start: int, stop: int) -> "CsiTrace":
        return CsiTrace(
            self.sample_rate,
            self.carrier_freq,
            self.subcarrier_spacing,
            self.timestamps_us[start:stop].copy(),
            self.values[start:stop].copy(),
        )

    def last_seconds(self, seconds: float) -> "CsiTrace":
        n = int(round(seconds * self.sample_rate))
        return self.slice(max(self.n_frames - n, 0), self.n_frames)

    def frames(self) -> Iterator[CsiFrame]:
        for i in range(self.n_frames):
            yield CsiFrame(int(self.timestamps_us[i]), self.values[i])

    def same_as(self, other: "CsiTrace") -> bool:
        """Bitwise equality of header fields, timestamps and CSI values."""
        return (
            self.sample_rate == other.sample_rate
            and self.carrier_freq == other.carrier_freq
            and self.subcarrier_spacing == other.subcarrier_spacing
            and np.array_equal(self.timestamps_us, other.timestamps_us)
            and self.values.shape == other.values.shape
            and np.array_equal(self.values.view(np.uint32), other.values.view(np.uint32))
        )


@dataclass(frozen=True)
class AmplitudeSeries:
    """A real-valued series (CSI amplitude or a derived waveform)."""

    sample_rate: float
    samples: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise DomainError(f"Sample rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DomainError("Amplitude series must be one-dimensional.")
        if not np.all(np.isfinite(samples)):
            raise DomainError("Amplitude series contains non-finite values.")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "AmplitudeSeries":
        return AmplitudeSeries(self.sample_rate, samples, self.start_time)


@dataclass(frozen=True)
class SpectrumEstimate:
    """Result of an in-band FFT peak search."""

    frequencies: np.ndarray
    magnitudes: np.ndarray
    peak_freq: float
    confidence: float

    @property
    def peak_bpm(self) -> float:
        return self.peak_freq * 60.0


@dataclass(frozen=True)
class VitalEstimate:
    """
    Breathing and heart rate estimated over one analysis window.

    A rate whose confidence is below `min_confidence` is flagged low-confidence;
    rates are NaN when the stream carried no usable signal.
    """

    breath_bpm: float
    heart_bpm: float
    breath_confidence: float
    heart_confidence: float
    window_start: float
    window_end: float
    antenna: int = 0
    subcarrier: int = 0
    min_confidence: float = 4.0

    @property
    def breath_low_confidence(self) -> bool:
        return not (self.breath_confidence >= self.min_confidence)

    @property
    def heart_low_confidence(self) -> bool:
        return not (self.heart_confidence >= self.min_confidence)

    def same_rates(self, other: "VitalEstimate") -> bool:
        """Bitwise comparison of the bpm outputs (NaN equals NaN)."""
        return np.array_equal(
            np.array([self.breath_bpm, self.heart_bpm]),
            np.array([other.breath_bpm, other.heart_bpm]),
            equal_nan=True,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window_start": self.window_start,
            "window_end": self.window_end,
            "breath_bpm": self.breath_bpm,
            "heart_bpm": self.heart_bpm,
            "breath_confidence": self.breath_confidence,
            "heart_confidence": self.heart_confidence,
            "breath_low_confidence": self.breath_low_confidence,
            "heart_low_confidence": self.heart_low_confidence,
            "antenna": self.antenna,
            "subcarrier": self.subcarrier,
        }


@dataclass(frozen=True)
class TruthSeries:
    """One ground-truth CSV: accelerometer samples or oximeter bpm readings."""

    times: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return int(self.times.size)

    def between(self, t_start: float, t_end: float) -> "TruthSeries":
        mask = (self.times >= t_start) & (self.times <= t_end)
        return TruthSeries(self.times[mask], self.values[mask])


@dataclass(frozen=True)
class GroundTruth:
    breath: Optional[TruthSeries] = None
    pulse: Optional[TruthSeries] = None


@dataclass
class SessionRecord:
    """
    One monitoring session kept in the session store.

    Attributes:
        session_id (str): Unique within a store.
        scenario (Dict[str, Any]): Free-form description of the setup.
        trace_path (str): Path of the raw trace file.
        trace_checksum (Optional[str]): sha256 of the trace file when known.
        estimates (List[Dict[str, Any]]): Estimates logged for the session.
    """

    session_id: str
    scenario: Dict[str, Any] = field(default_factory=dict)
    trace_path: str = ""
    trace_checksum: Optional[str] = None
    estimates: List[Dict[str, Any]] = field(default_factory=list)
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
