"""
Tests for the frame source components.
"""

import io
import threading
import time

import numpy as np
import pytest

from csivital.components.sources import StdinSource, TraceFileSource
from csivital.utils.data_models import CsiTrace
from csivital.utils.errors import BadMagicError, DomainError, TruncatedTraceError
from csivital.utils.trace_io import HEADER_SIZE, TraceFileHeader, write_trace


@pytest.fixture
def small_trace():
    """50 frames at 100 Hz, 2 antennas x 3 subcarriers."""
    rng = np.random.default_rng(7)
    values = (rng.normal(size=(50, 2, 3)) + 1j * rng.normal(size=(50, 2, 3))).astype(np.complex64)
    return CsiTrace(100.0, 5.32e9, 312_500.0, np.arange(50) * 10_000, values)


def _assert_frames_match(frames, trace):
    assert len(frames) == trace.n_frames
    for frame, expected in zip(frames, trace.frames()):
        assert frame.timestamp_us == expected.timestamp_us
        np.testing.assert_array_equal(frame.values, expected.values)


def test_file_source_yields_every_frame(tmp_path, small_trace):
    """Tests that TraceFileSource reads the header and all frames of a file."""
    path = tmp_path / "trace.csit"
    write_trace(path, small_trace)

    source = TraceFileSource(path=str(path))
    source.test_connection()
    assert source.header == TraceFileHeader.from_trace(small_trace)
    _assert_frames_match(list(source.frames()), small_trace)


def test_file_source_missing_file(tmp_path):
    source = TraceFileSource(path=str(tmp_path / "missing.csit"))
    with pytest.raises(FileNotFoundError):
        source.test_connection()


def test_file_source_truncated_frame(tmp_path, small_trace):
    """Tests that a cut-off final frame is reported with its index."""
    path = tmp_path / "trace.csit"
    write_trace(path, small_trace)
    path.write_bytes(path.read_bytes()[:-5])

    source = TraceFileSource(path=str(path))
    with pytest.raises(TruncatedTraceError) as excinfo:
        list(source.frames())
    assert excinfo.value.frame_index == small_trace.n_frames - 1


def test_file_source_follows_a_growing_file(tmp_path, small_trace):
    """Tests that follow mode waits for frames appended after the reader started."""
    path = tmp_path / "growing.csit"
    write_trace(path, small_trace)
    data = path.read_bytes()
    split = HEADER_SIZE + 20 * TraceFileHeader.from_trace(small_trace).frame_size
    path.write_bytes(data[:split])

    def writer():
        time.sleep(0.2)
        with open(path, "ab") as f:
            f.write(data[split:])

    thread = threading.Thread(target=writer)
    thread.start()
    try:
        source = TraceFileSource(path=str(path), follow=True, idle_timeout=2.0, poll_interval=0.02)
        frames = list(source.frames())
    finally:
        thread.join()
    _assert_frames_match(frames, small_trace)


def test_follow_mode_ends_when_the_file_goes_idle(tmp_path, small_trace):
    path = tmp_path / "trace.csit"
    write_trace(path, small_trace)
    source = TraceFileSource(path=str(path), follow=True, idle_timeout=0.05, poll_interval=0.01)
    assert len(list(source.frames())) == small_trace.n_frames


def test_file_source_rejects_bad_timing():
    with pytest.raises(DomainError):
        TraceFileSource(path="x.csit", poll_interval=0.0)


def test_stdin_source_reads_a_pipe(tmp_path, small_trace):
    """Tests that StdinSource decodes a trace from any binary stream."""
    path = tmp_path / "trace.csit"
    write_trace(path, small_trace)

    source = StdinSource(stream=io.BytesIO(path.read_bytes()))
    source.test_connection()
    assert source.header.sample_rate == 100.0
    _assert_frames_match(list(source.frames()), small_trace)


def test_stdin_source_without_a_trace():
    source = StdinSource(stream=io.BytesIO(b"not a trace at all, just some text"))
    with pytest.raises(BadMagicError):
        source.test_connection()
