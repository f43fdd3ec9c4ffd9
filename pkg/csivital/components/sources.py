"""
Frame source components for the streaming estimator.

Each source yields the frames of one binary CSI trace in arrival order,
either from a file (optionally followed while it grows) or from a pipe.
"""

from abc import ABC, abstractmethod
import logging
import sys
import time
from pathlib import Path
from typing import BinaryIO, Iterator, Optional

from ..utils.data_models import CsiFrame
from ..utils.errors import DataError, DomainError
from ..utils.trace_io import TraceFileHeader, TraceReader

logger = logging.getLogger(__name__)


class BaseFrameSource(ABC):
    """Abstract base class for all frame source components."""

    @property
    @abstractmethod
    def header(self) -> TraceFileHeader:
        """The trace header: sample rate and frame layout."""
        pass

    @abstractmethod
    def frames(self) -> Iterator[CsiFrame]:
        """Yields frames until the source is exhausted."""
        pass

    @abstractmethod
    def test_connection(self):
        """
        Checks that the source is readable and starts with a valid header.
        """
        pass

    def close(self):
        pass


class _TailStream:
    """File wrapper whose reads wait for more data until the file goes idle."""

    def __init__(self, f: BinaryIO, idle_timeout: float, poll_interval: float):
        self.f = f
        self.idle_timeout = idle_timeout
        self.poll_interval = poll_interval

    def read(self, size: int) -> bytes:
        waited = 0.0
        while True:
            chunk = self.f.read(size)
            if chunk or waited >= self.idle_timeout:
                return chunk
            time.sleep(self.poll_interval)
            waited += self.poll_interval


class TraceFileSource(BaseFrameSource):
    """
    Reads frames from a trace file.

    With `follow=True` the file is tailed: reads at the end of the file wait
    for the writer, and the stream ends after `idle_timeout` seconds without
    new data.
    """

    def __init__(
        self,
        path: str,
        follow: bool = False,
        idle_timeout: float = 5.0,
        poll_interval: float = 0.2,
    ):
        if idle_timeout < 0 or poll_interval <= 0:
            raise DomainError("idle_timeout must be >= 0 and poll_interval > 0")
        self.path = Path(path)
        self.follow = follow
        self.idle_timeout = idle_timeout
        self.poll_interval = poll_interval
        self._file: Optional[BinaryIO] = None
        self._reader: Optional[TraceReader] = None
        logger.debug(f"Initialized TraceFileSource with path='{self.path}', follow={follow}")

    def _open(self) -> TraceReader:
        if self._reader is None:
            if not self.path.is_file():
                raise FileNotFoundError(f"Trace file not found: '{self.path}'")
            self._file = open(self.path, "rb")
            stream = self._file
            if self.follow:
                stream = _TailStream(self._file, self.idle_timeout, self.poll_interval)
            self._reader = TraceReader(stream, name=str(self.path))
        return self._reader

    @property
    def header(self) -> TraceFileHeader:
        return self._open().header

    def frames(self) -> Iterator[CsiFrame]:
        logger.info(f"Reading frames from '{self.path}'")
        try:
            yield from self._open().frames()
        finally:
            self.close()

    def test_connection(self):
        header = self.header
        logger.info(
            f"'{self.path}' is readable: {header.n_antennas} antennas x "
            f"{header.n_subcarriers} subcarriers at {header.sample_rate} Hz"
        )

    def close(self):
        if self._file is not None:
            self._file.close()
            self._file = None


class StdinSource(BaseFrameSource):
    """Reads frames from a binary pipe, standard input by default."""

    def __init__(self, stream: Optional[BinaryIO] = None):
        self.stream = stream if stream is not None else sys.stdin.buffer
        self._reader = TraceReader(self.stream, name="<stdin>")

    @property
    def header(self) -> TraceFileHeader:
        return self._reader.header

    def frames(self) -> Iterator[CsiFrame]:
        logger.info("Reading frames from standard input")
        yield from self._reader.frames()

    def test_connection(self):
        try:
            header = self.header
        except DataError as e:
            logger.error(f"Standard input does not carry a trace: {e}")
            raise
        logger.info(f"Standard input carries a trace at {header.sample_rate} Hz")
