"""
Trace and ground-truth file formats.

Binary trace layout (little-endian):

    header  magic "CSIT" | version u16 | sample_rate f64 | n_antennas u8 |
            n_subcarriers u16 | carrier_freq f64 | subcarrier_spacing f64
    frames  timestamp u64 (microseconds) followed by interleaved f32
            (real, imag) per (antenna, subcarrier), antenna-major

Ground truth is a CSV with header `time_s,value`. CSV exports exist for
plotting only.
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator, Optional, Union

import numpy as np
import pandas as pd

from .data_models import CsiFrame, CsiTrace, SpectrumEstimate, TruthSeries
from .errors import (
    BadMagicError,
    DomainError,
    GroundTruthError,
    NonMonotonicTimestampError,
    TraceFormatError,
    TruncatedTraceError,
    UnsupportedVersionError,
)

logger = logging.getLogger(__name__)

MAGIC = b"CSIT"
FORMAT_VERSION = 1
HEADER_STRUCT = struct.Struct("<4sHdBHdd")
HEADER_SIZE = HEADER_STRUCT.size
TIMESTAMP_SIZE = 8

PathLike = Union[str, Path]


@dataclass(frozen=True)
class TraceFileHeader:
    sample_rate: float
    n_antennas: int
    n_subcarriers: int
    carrier_freq: float
    subcarrier_spacing: float
    version: int = FORMAT_VERSION

    @classmethod
    def from_trace(cls, trace: CsiTrace) -> "TraceFileHeader":
        return cls(
            sample_rate=trace.sample_rate,
            n_antennas=trace.n_antennas,
            n_subcarriers=trace.n_subcarriers,
            carrier_freq=trace.carrier_freq,
            subcarrier_spacing=trace.subcarrier_spacing,
        )

    @property
    def frame_size(self) -> int:
        return TIMESTAMP_SIZE + self.n_antennas * self.n_subcarriers * 2 * 4

    @property
    def frame_dtype(self) -> np.dtype:
        return np.dtype(
            [
                ("timestamp_us", "<u8"),
                ("values", "<f4", (self.n_antennas, self.n_subcarriers, 2)),
            ]
        )

    def pack(self) -> bytes:
        if not 1 <= self.n_antennas <= 255 or not 1 <= self.n_subcarriers <= 65535:
            raise TraceFormatError(
                f"Cannot encode {self.n_antennas} antennas x {self.n_subcarriers} subcarriers"
            )
        return HEADER_STRUCT.pack(
            MAGIC,
            self.version,
            self.sample_rate,
            self.n_antennas,
            self.n_subcarriers,
            self.carrier_freq,
            self.subcarrier_spacing,
        )

    @classmethod
    def unpack(cls, data: bytes, source: str = "<trace>") -> "TraceFileHeader":
        if len(data) >= 4 and data[:4] != MAGIC:
            raise BadMagicError(f"{source}: bad magic {data[:4]!r}, expected {MAGIC!r}")
        if len(data) < HEADER_SIZE:
            raise TruncatedTraceError(
                f"{source}: file ends inside the header ({len(data)} of {HEADER_SIZE} bytes)"
            )
        magic, version, rate, n_ant, n_sub, carrier, spacing = HEADER_STRUCT.unpack_from(data)
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(
                f"{source}: format version {version} is not supported (expected {FORMAT_VERSION})"
            )
        if n_ant < 1 or n_sub < 1:
            raise TraceFormatError(f"{source}: header declares {n_ant} antennas, {n_sub} subcarriers")
        if not rate > 0:
            raise TraceFormatError(f"{source}: header declares sample rate {rate}")
        return cls(rate, n_ant, n_sub, carrier, spacing, version)


def _records_to_values(records: np.ndarray, header: TraceFileHeader) -> np.ndarray:
    interleaved = np.ascontiguousarray(records["values"], dtype="<f4")
    return interleaved.view(np.complex64).reshape(
        len(records), header.n_antennas, header.n_subcarriers
    )


def write_trace(path: PathLike, trace: CsiTrace):
    """Writes a trace in the binary trace format."""
    header = TraceFileHeader.from_trace(trace)
    records = np.empty(trace.n_frames, dtype=header.frame_dtype)
    records["timestamp_us"] = trace.timestamps_us.astype("<u8")
    records["values"] = (
        np.ascontiguousarray(trace.values, dtype=np.complex64)
        .view(np.float32)
        .reshape(trace.n_frames, trace.n_antennas, trace.n_subcarriers, 2)
    )
    with open(path, "wb") as f:
        f.write(header.pack())
        f.write(records.tobytes())
    logger.info(f"Wrote {trace.n_frames} frames to '{path}'")


def read_trace(path: PathLike) -> CsiTrace:
    """
    Reads a whole trace file.

    Raises:
        FileNotFoundError: If the file does not exist.
        BadMagicError, UnsupportedVersionError, TruncatedTraceError: On a
            malformed file. The declared frame size must divide the body
            length exactly; nothing past the file end is read.
        NonMonotonicTimestampError: If a frame is not stamped after the one before.
        TraceFormatError: If the frames break another trace rule (frame spacing).
    """
    data = Path(path).read_bytes()
    header = TraceFileHeader.unpack(data, source=str(path))
    n_frames, remainder = divmod(len(data) - HEADER_SIZE, header.frame_size)
    if remainder:
        raise TruncatedTraceError(
            f"{path}: file ends inside frame {n_frames} "
            f"({remainder} of {header.frame_size} bytes)",
            frame_index=n_frames,
        )
    records = np.frombuffer(data, dtype=header.frame_dtype, count=n_frames, offset=HEADER_SIZE)
    logger.debug(f"Read {n_frames} frames from '{path}'")
    timestamps_us = records["timestamp_us"].astype(np.int64)
    steps = np.diff(timestamps_us)
    if np.any(steps <= 0):
        bad = int(np.argmax(steps <= 0)) + 1
        raise NonMonotonicTimestampError(
            f"{path}: frame {bad} is stamped {timestamps_us[bad]} us, "
            f"not after {timestamps_us[bad - 1]} us",
            frame_index=bad,
        )
    try:
        return CsiTrace(
            sample_rate=header.sample_rate,
            carrier_freq=header.carrier_freq,
            subcarrier_spacing=header.subcarrier_spacing,
            timestamps_us=timestamps_us,
            values=_records_to_values(records, header),
        )
    except DomainError as e:
        raise TraceFormatError(f"{path}: {e}") from e


class TraceReader:
    """
    Reads a trace incrementally from a binary stream (a file or a pipe).

    The header is read on first use; frames are yielded one at a time so a
    caller can act on each frame as it arrives.
    """

    def __init__(self, stream: BinaryIO, name: str = "<stream>"):
        self.stream = stream
        self.name = name
        self._header: Optional[TraceFileHeader] = None

    def _read_exact(self, size: int) -> bytes:
        chunks = []
        remaining = size
        while remaining > 0:
            chunk = self.stream.read(remaining)
            if not chunk:
                break
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    @property
    def header(self) -> TraceFileHeader:
        if self._header is None:
            self._header = TraceFileHeader.unpack(self._read_exact(HEADER_SIZE), source=self.name)
        return self._header

    def frames(self) -> Iterator[CsiFrame]:
        header = self.header
        index = 0
        while True:
            chunk = self._read_exact(header.frame_size)
            if not chunk:
                return
            if len(chunk) < header.frame_size:
                raise TruncatedTraceError(
                    f"{self.name}: stream ends inside frame {index} "
                    f"({len(chunk)} of {header.frame_size} bytes)",
                    frame_index=index,
                )
            (timestamp,) = struct.unpack_from("<Q", chunk)
            values = (
                np.frombuffer(chunk, dtype="<f4", offset=TIMESTAMP_SIZE)
                .view(np.complex64)
                .reshape(header.n_antennas, header.n_subcarriers)
            )
            yield CsiFrame(int(timestamp), values)
            index += 1


def read_ground_truth(path: PathLike) -> TruthSeries:
    """
    Reads a `time_s,value` CSV (accelerometer samples or oximeter bpm).

    Raises:
        GroundTruthError: On a wrong header, non-numeric cells, or times that
            are not strictly increasing.
    """
    try:
        df = pd.read_csv(path, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise GroundTruthError(f"Could not parse ground truth '{path}': {e}") from e

    columns = [str(c).strip() for c in df.columns]
    if columns != ["time_s", "value"]:
        raise GroundTruthError(f"'{path}': expected header 'time_s,value', got {columns}")

    try:
        times = df.iloc[:, 0].to_numpy(dtype=float)
        values = df.iloc[:, 1].to_numpy(dtype=float)
    except ValueError as e:
        raise GroundTruthError(f"'{path}': non-numeric ground truth: {e}") from e
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
        raise GroundTruthError(f"'{path}': ground truth contains missing or non-finite values")

    steps = np.diff(times)
    if np.any(steps <= 0):
        row = int(np.argmax(steps <= 0)) + 1
        raise GroundTruthError(f"'{path}': time_s is not increasing at row {row}")
    return TruthSeries(times=times, values=values)


def write_ground_truth(path: PathLike, series: TruthSeries):
    pd.DataFrame({"time_s": series.times, "value": series.values}).to_csv(path, index=False)
    logger.debug(f"Wrote {len(series)} ground-truth rows to '{path}'")


def export_amplitude_csv(path: PathLike, trace: CsiTrace, antenna: int, subcarrier: int):
    """Exports one stream's amplitude as `time_s,amplitude` for external plotting."""
    amplitude = trace.amplitudes(antenna)[:, subcarrier]
    pd.DataFrame({"time_s": trace.timestamps, "amplitude": amplitude}).to_csv(path, index=False)
    logger.info(f"Exported amplitude of antenna {antenna}, subcarrier {subcarrier} to '{path}'")


def export_spectrum_csv(path: PathLike, spectrum: SpectrumEstimate):
    pd.DataFrame(
        {"frequency_hz": spectrum.frequencies, "magnitude": spectrum.magnitudes}
    ).to_csv(path, index=False)
    logger.info(f"Exported spectrum ({len(spectrum.frequencies)} bins) to '{path}'")
