from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .data_models import SPEED_OF_LIGHT, Posture
from .errors import DomainError

Vector3 = Tuple[float, float, float]


class ComponentConfig(BaseModel):
    """A model for a pluggable component's configuration (pulse shape, source, sink)."""

    type: str
    config: Dict[str, Any] = {}


class BandSpec(BaseModel):
    """A frequency band in Hz."""

    model_config = ConfigDict(frozen=True)

    low: float = Field(gt=0)
    high: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.low < self.high:
            raise ValueError(f"Band low ({self.low}) must be below high ({self.high})")
        return self

    @property
    def low_bpm(self) -> float:
        return self.low * 60.0

    @property
    def high_bpm(self) -> float:
        return self.high * 60.0

    @property
    def center(self) -> float:
        return (self.low * self.high) ** 0.5

    def check_nyquist(self, sample_rate: float):
        """Raises DomainError unless 0 < low < high < sample_rate / 2."""
        if not self.high < sample_rate / 2.0:
            raise DomainError(
                f"Band {self.low}-{self.high} Hz violates Nyquist for {sample_rate} Hz sampling"
            )


class PipelineConfig(BaseModel):
    """Parameters of the subcarrier-selection / Hampel / bandpass / FFT chain."""

    hampel_window: Optional[int] = Field(default=None, description="Samples; None = 1 s, odd.")
    hampel_nsigma: float = Field(default=3.0, gt=0)
    butterworth_order: int = Field(default=4, gt=0)
    breath_band: BandSpec = BandSpec(low=0.25, high=0.5)
    heart_band: BandSpec = BandSpec(low=1.0, high=2.0)
    fft_window: float = Field(default=40.0, gt=0, description="Seconds analysed per estimate.")
    zero_padding: int = Field(default=4, ge=1)
    harmonic_guard_bins: float = Field(default=1.0, ge=0)
    min_confidence: float = Field(default=4.0, ge=0)
    antenna: Optional[int] = Field(default=None, ge=0, description="None = best stream.")

    @field_validator("hampel_window")
    @classmethod
    def _odd_window(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and (value < 3 or value % 2 == 0):
            raise ValueError(f"hampel_window must be odd and >= 3, got {value}")
        return value

    @model_validator(mode="after")
    def _window_covers_bands(self):
        for name, band in (("breath_band", self.breath_band), ("heart_band", self.heart_band)):
            if self.fft_window < 2.0 / band.low:
                raise ValueError(
                    f"fft_window {self.fft_window}s is shorter than two periods of {name}.low"
                )
        return self

    def resolve_hampel_window(self, sample_rate: float) -> int:
        if self.hampel_window is not None:
            return self.hampel_window
        window = max(int(round(sample_rate)), 3)
        return window if window % 2 == 1 else window + 1


class StreamConfig(BaseModel):
    threshold: float = Field(default=40.0, gt=0, description="Seconds buffered before estimating.")
    update_interval: float = Field(default=1.0, gt=0)
    pipeline: PipelineConfig = PipelineConfig()

    @model_validator(mode="after")
    def _schedule(self):
        if self.threshold < self.update_interval:
            raise ValueError("threshold must be >= update_interval")
        if self.threshold < self.pipeline.fft_window:
            raise ValueError(
                f"threshold ({self.threshold}s) must cover fft_window ({self.pipeline.fft_window}s)"
            )
        return self


class NoiseSpec(BaseModel):
    snr_db: Optional[float] = Field(default=20.0, description="None disables Gaussian noise.")
    outlier_rate: float = Field(default=0.0, ge=0, lt=1)
    outlier_magnitude: float = Field(default=8.0, ge=0)

    @classmethod
    def off(cls) -> "NoiseSpec":
        return cls(snr_db=None, outlier_rate=0.0)


class SimulationConfig(BaseModel):
    sample_rate: float = Field(default=500.0, gt=0)
    n_subcarriers: int = Field(default=30, ge=1, le=65535)
    bandwidth: float = Field(default=20e6, ge=0, description="Span between outer subcarriers.")
    pulse: ComponentConfig = ComponentConfig(type="raised_cosine", config={"duty": 0.5})
    recumbent_depth_factor: float = Field(default=0.4, ge=0, le=1)

    @property
    def subcarrier_spacing(self) -> float:
        if self.n_subcarriers == 1:
            return 0.0
        return self.bandwidth / (self.n_subcarriers - 1)


class AppConfig(BaseModel):
    """The top-level model for a csivital YAML config file."""

    pipeline: PipelineConfig = PipelineConfig()
    stream: StreamConfig = StreamConfig()
    noise: NoiseSpec = NoiseSpec()
    simulation: SimulationConfig = SimulationConfig()

    @model_validator(mode="before")
    @classmethod
    def _share_pipeline(cls, data: Any) -> Any:
        # The stream section always runs the top-level pipeline settings.
        if isinstance(data, dict):
            data = dict(data)
            stream = dict(data.get("stream") or {})
            stream["pipeline"] = data.get("pipeline") or {}
            data["stream"] = stream
        return data


class StaticPathConfig(BaseModel):
    amplitude: float = Field(default=1.0, ge=0)
    phase: Union[float, Literal["quadrature"]] = "quadrature"
    attenuation: float = Field(default=1.0, ge=0, le=1)


class ReceiverConfig(BaseModel):
    name: str
    position: Vector3
    static: StaticPathConfig = StaticPathConfig()
    reflection_gain: float = Field(default=0.5, ge=0)
    reflection_attenuation: float = Field(default=1.0, ge=0, le=1)


class ProfileConfig(BaseModel):
    breath_rate: float = 18.0
    breath_depth: float = 0.005
    heart_rate: float = 72.0
    heart_amplitude: float = 0.0005
    posture: Posture = Posture.SUPINE


class CandidateConfig(BaseModel):
    """One antenna placement considered by the planner."""

    name: str
    tx: Vector3
    rx: Vector3
    body_point: Vector3
    posture: Posture = Posture.SUPINE
    motion_direction: Optional[Vector3] = None
    amplitude: Optional[float] = Field(default=None, ge=0)


class ScenarioConfig(BaseModel):
    """Geometry scenario: antennas, body point, motion profile and planner candidates."""

    carrier_freq: float = Field(default=5.32e9, gt=0)
    wavelength: Optional[float] = Field(default=None, gt=0)
    transmitter: Vector3 = (0.0, 0.0, 0.6)
    receivers: List[ReceiverConfig] = []
    body_point: Vector3 = (0.4, 0.13, 0.47)
    profile: ProfileConfig = ProfileConfig()
    candidates: List[CandidateConfig] = []

    @property
    def resolved_wavelength(self) -> float:
        if self.wavelength is not None:
            return self.wavelength
        return SPEED_OF_LIGHT / self.carrier_freq


class ManifestEntry(BaseModel):
    """One recorded (or synthesized) session in an evaluation manifest."""

    trace: str
    breath_truth: Optional[str] = None
    pulse_truth: Optional[str] = None
    posture: Posture = Posture.SUPINE
    participant: str = "unknown"

    @model_validator(mode="after")
    def _has_truth(self):
        if self.breath_truth is None and self.pulse_truth is None:
            raise ValueError(f"Entry '{self.trace}' names no ground truth")
        return self


class EvalManifest(BaseModel):
    entries: List[ManifestEntry] = Field(min_length=1)
