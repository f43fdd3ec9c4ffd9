"""
Exception hierarchy for csivital.

Library code raises these; the CLI maps them to exit codes
(2 for usage, configuration and domain errors, 3 for data errors).
"""

from typing import Optional


class CsiVitalError(Exception):
    """Base class for all csivital errors."""


class DomainError(CsiVitalError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(CsiVitalError):
    """A configuration or scenario file is missing, unreadable or invalid."""


class DataError(CsiVitalError):
    """Input data cannot be used (bad files, too little data, misalignment)."""


class InsufficientDataError(DataError):
    """Not enough samples to run the requested estimate."""


class TraceFormatError(DataError):
    """A trace file does not follow the binary trace format."""


class BadMagicError(TraceFormatError):
    pass


class UnsupportedVersionError(TraceFormatError):
    pass


class TruncatedTraceError(TraceFormatError):
    """A trace ends inside the header or inside a frame."""

    def __init__(self, message: str, frame_index: Optional[int] = None):
        super().__init__(message)
        self.frame_index = frame_index


class NonMonotonicTimestampError(DataError):
    """A frame arrived with a timestamp not after the previous one."""

    def __init__(self, message: str, frame_index: Optional[int] = None):
        super().__init__(message)
        self.frame_index = frame_index


class GroundTruthError(DataError):
    pass


class DuplicateSessionError(DataError):
    pass


class AlignmentError(DataError):
    """Trace and ground truth do not cover the same time range."""
