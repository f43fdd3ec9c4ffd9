"""
Tests for the estimate sink components.
"""

import io
import math

import pandas as pd
import pytest

from csivital.components.sinks import CSV_COLUMNS, CsvSink, TextSink, format_estimate
from csivital.utils.data_models import VitalEstimate


@pytest.fixture
def estimate():
    """A confident breathing rate with a low-confidence heart rate."""
    return VitalEstimate(
        breath_bpm=18.0,
        heart_bpm=72.375,
        breath_confidence=50.0,
        heart_confidence=2.5,
        window_start=0.0,
        window_end=39.998,
        antenna=2,
        subcarrier=11,
    )


def test_text_sink_writes_one_line(estimate):
    stream = io.StringIO()
    TextSink(stream=stream).write(estimate)
    assert stream.getvalue() == "39.998, 18.00, 72.38, 50.00, 2.50\n"


def test_text_sink_detailed_block(estimate):
    """Tests that the detailed format flags only the low-confidence rate."""
    stream = io.StringIO()
    TextSink(stream=stream, detailed=True).write(estimate)
    text = stream.getvalue()
    assert "antenna 2  subcarrier 11" in text
    assert text.count("(low confidence)") == 1
    assert "heart_bpm: 72.38  confidence: 2.50  (low confidence)" in text


def test_text_sink_defaults_to_stdout(estimate, capsys):
    TextSink().write(estimate)
    assert capsys.readouterr().out.startswith("39.998, 18.00")


def test_csv_sink_writes_header_once(tmp_path, estimate):
    """Tests that the CSV sink writes a single header row followed by one row per estimate."""
    path = tmp_path / "out" / "estimates.csv"
    sink = CsvSink(path=str(path))
    sink.write(estimate)
    sink.write(estimate)
    sink.close()

    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3

    df = pd.read_csv(path)
    assert list(df["breath_bpm"]) == [18.0, 18.0]
    assert not df["breath_low_confidence"].any()
    assert df["heart_low_confidence"].all()


def test_csv_sink_to_stdout(estimate, capsys):
    sink = CsvSink()
    sink.write(estimate)
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("t_end,breath_bpm")
    assert out[1].startswith("39.998,18.0,72.375")


def test_nan_rates_are_flagged():
    silent = VitalEstimate(math.nan, math.nan, math.nan, math.nan, 0.0, 40.0)
    text = format_estimate(silent)
    assert "breath_bpm: nan" in text
    assert text.count("(low confidence)") == 2
