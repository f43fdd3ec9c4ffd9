"""
Real-time estimator fed one frame at a time.

Frames accumulate in a fixed-capacity ring buffer holding `threshold`
seconds. Once the buffer is full an estimate is emitted, then again every
`update_interval` seconds, each computed exactly as the batch pipeline
would compute it on the buffered window.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..utils.config_models import StreamConfig
from ..utils.data_models import CsiFrame, CsiTrace, VitalEstimate
from ..utils.errors import DataError, NonMonotonicTimestampError
from .pipeline import estimate_vitals

logger = logging.getLogger(__name__)

SPACING_TOLERANCE = 0.01


@dataclass(frozen=True)
class EstimatorState:
    """A snapshot of the estimator's bookkeeping."""

    buffered_frames: int
    capacity: int
    samples_seen: int
    last_timestamp_us: Optional[int]
    last_emit_time_us: Optional[int]


class StreamingEstimator:
    """
    Sliding-window estimator over a frame stream.

    One thread pushes frames; any thread may read `last_estimate`.

    Args:
        config (StreamConfig): Threshold, update interval and pipeline parameters.
        sample_rate (float): Frame rate of the stream in Hz.
        n_antennas (int): Antennas per frame.
        n_subcarriers (int): Subcarriers per frame.
        carrier_freq (float): Carried into the buffered trace.
        subcarrier_spacing (float): Carried into the buffered trace.
    """

    def __init__(
        self,
        config: StreamConfig,
        sample_rate: float,
        n_antennas: int,
        n_subcarriers: int,
        carrier_freq: float = 0.0,
        subcarrier_spacing: float = 0.0,
    ):
        if not sample_rate > 0:
            raise DataError(f"Sample rate must be positive, got {sample_rate}")
        self.config = config
        self.sample_rate = sample_rate
        self.carrier_freq = carrier_freq
        self.subcarrier_spacing = subcarrier_spacing
        self.capacity = int(round(config.threshold * sample_rate))
        self.frame_shape = (n_antennas, n_subcarriers)

        self._frame_period_us = 1e6 / sample_rate
        self._interval_us = int(round(config.update_interval * 1e6)) - int(round(0.5 * self._frame_period_us))
        self._timestamps = np.zeros(self.capacity, dtype=np.int64)
        self._values = np.zeros((self.capacity,) + self.frame_shape, dtype=np.complex64)
        self._lock = threading.Lock()
        self._last_estimate: Optional[VitalEstimate] = None
        self.reset()
        logger.debug(
            f"StreamingEstimator ready: capacity {self.capacity} frames, "
            f"update every {config.update_interval}s"
        )

    @classmethod
    def for_header(cls, config: StreamConfig, header) -> "StreamingEstimator":
        """Builds an estimator matching a trace file header."""
        return cls(
            config,
            header.sample_rate,
            header.n_antennas,
            header.n_subcarriers,
            header.carrier_freq,
            header.subcarrier_spacing,
        )

    def reset(self) -> "StreamingEstimator":
        """Empties the buffer and zeroes the counters. The last emitted estimate is kept."""
        self._count = 0
        self._head = 0
        self._samples_seen = 0
        self._last_timestamp_us: Optional[int] = None
        self._last_emit_us: Optional[int] = None
        return self

    @property
    def state(self) -> EstimatorState:
        return EstimatorState(
            buffered_frames=self._count,
            capacity=self.capacity,
            samples_seen=self._samples_seen,
            last_timestamp_us=self._last_timestamp_us,
            last_emit_time_us=self._last_emit_us,
        )

    @property
    def last_estimate(self) -> Optional[VitalEstimate]:
        with self._lock:
            return self._last_estimate

    def _check_frame(self, frame: CsiFrame):
        if frame.values.shape != self.frame_shape:
            raise DataError(
                f"Frame {self._samples_seen} has shape {frame.values.shape}, expected {self.frame_shape}"
            )
        if self._last_timestamp_us is None:
            return
        step = frame.timestamp_us - self._last_timestamp_us
        if step <= 0:
            raise NonMonotonicTimestampError(
                f"Frame {self._samples_seen} has timestamp {frame.timestamp_us} us, "
                f"not after {self._last_timestamp_us} us",
                frame_index=self._samples_seen,
            )
        if abs(step - self._frame_period_us) > SPACING_TOLERANCE * self._frame_period_us:
            raise DataError(
                f"Frame {self._samples_seen} arrives {step} us after the previous one; "
                f"expected {self._frame_period_us:.1f} us"
            )

    def _buffered_trace(self) -> CsiTrace:
        order = (np.arange(self._count) + self._head - self._count) % self.capacity
        return CsiTrace(
            sample_rate=self.sample_rate,
            carrier_freq=self.carrier_freq,
            subcarrier_spacing=self.subcarrier_spacing,
            timestamps_us=self._timestamps[order],
            values=self._values[order],
        )

    def push_frame(self, frame: CsiFrame) -> Optional[VitalEstimate]:
        """
        Buffers one frame and returns an estimate when one is due.

        Raises:
            NonMonotonicTimestampError: If the frame is not after the previous
                one. The frame is rejected and the state is unchanged.
            DataError: If the frame layout or spacing does not match the stream.
        """
        self._check_frame(frame)

        self._timestamps[self._head] = frame.timestamp_us
        self._values[self._head] = frame.values
        self._head = (self._head + 1) % self.capacity
        self._count = min(self._count + 1, self.capacity)
        self._samples_seen += 1
        self._last_timestamp_us = frame.timestamp_us

        if self._count < self.capacity:
            return None
        if self._last_emit_us is not None and frame.timestamp_us - self._last_emit_us < self._interval_us:
            return None

        estimate = estimate_vitals(self._buffered_trace(), self.config.pipeline)
        self._last_emit_us = frame.timestamp_us
        with self._lock:
            self._last_estimate = estimate
        if estimate.breath_low_confidence or estimate.heart_low_confidence:
            logger.warning(f"Low-confidence estimate at t={estimate.window_end:.3f}s")
        logger.info(
            f"Emitted estimate at t={estimate.window_end:.3f}s: "
            f"breath {estimate.breath_bpm:.2f} bpm, heart {estimate.heart_bpm:.2f} bpm"
        )
        return estimate
