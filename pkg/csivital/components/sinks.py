"""
Estimate sink components: where emitted VitalEstimates go.
"""

from abc import ABC, abstractmethod
import logging
import sys
from pathlib import Path
from typing import Optional, TextIO

import pandas as pd

from ..utils.data_models import VitalEstimate

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "t_end",
    "breath_bpm",
    "heart_bpm",
    "breath_confidence",
    "heart_confidence",
    "breath_low_confidence",
    "heart_low_confidence",
]


class BaseEstimateSink(ABC):
    """Abstract base class for all estimate sinks."""

    @abstractmethod
    def write(self, estimate: VitalEstimate):
        pass

    def close(self):
        pass


class TextSink(BaseEstimateSink):
    """
    Prints estimates as text.

    The default is one line per estimate, `t_end, breath_bpm, heart_bpm,
    conf_b, conf_h`. With `detailed=True` a labelled block is printed
    instead, flagging low-confidence rates.
    """

    def __init__(self, stream: Optional[TextIO] = None, detailed: bool = False):
        self.stream = stream
        self.detailed = detailed

    def _out(self) -> TextIO:
        return self.stream if self.stream is not None else sys.stdout

    def write(self, estimate: VitalEstimate):
        if self.detailed:
            text = format_estimate(estimate)
        else:
            text = (
                f"{estimate.window_end:.3f}, {estimate.breath_bpm:.2f}, {estimate.heart_bpm:.2f}, "
                f"{estimate.breath_confidence:.2f}, {estimate.heart_confidence:.2f}"
            )
        print(text, file=self._out(), flush=True)


class CsvSink(BaseEstimateSink):
    """Writes estimates as CSV rows to a file, or to stdout when no path is given."""

    def __init__(self, path: Optional[str] = None):
        self.path = Path(path) if path else None
        self._header_written = False
        self._file: Optional[TextIO] = None

    def _out(self) -> TextIO:
        if self.path is None:
            return sys.stdout
        if self._file is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._file = open(self.path, "w", encoding="utf-8", newline="")
            logger.info(f"Writing estimates to '{self.path}'")
        return self._file

    def write(self, estimate: VitalEstimate):
        row = {
            "t_end": estimate.window_end,
            "breath_bpm": estimate.breath_bpm,
            "heart_bpm": estimate.heart_bpm,
            "breath_confidence": estimate.breath_confidence,
            "heart_confidence": estimate.heart_confidence,
            "breath_low_confidence": estimate.breath_low_confidence,
            "heart_low_confidence": estimate.heart_low_confidence,
        }
        out = self._out()
        pd.DataFrame([row], columns=CSV_COLUMNS).to_csv(
            out, header=not self._header_written, index=False, lineterminator="\n"
        )
        out.flush()
        self._header_written = True

    def close(self):
        if self._file is not None:
            self._file.close()
            self._file = None


def format_estimate(estimate: VitalEstimate) -> str:
    """A human-readable block describing one estimate."""

    def flag(low: bool) -> str:
        return "  (low confidence)" if low else ""

    return "\n".join(
        [
            f"window: {estimate.window_start:.3f}-{estimate.window_end:.3f} s  "
            f"antenna {estimate.antenna}  subcarrier {estimate.subcarrier}",
            f"breath_bpm: {estimate.breath_bpm:.2f}  confidence: {estimate.breath_confidence:.2f}"
            f"{flag(estimate.breath_low_confidence)}",
            f"heart_bpm: {estimate.heart_bpm:.2f}  confidence: {estimate.heart_confidence:.2f}"
            f"{flag(estimate.heart_low_confidence)}",
        ]
    )
