"""
Heartbeat pulse shapes for the channel simulator.

A pulse shape maps a phase (radians, 2*pi per beat) to a zero-mean periodic
waveform with peak-to-peak 2, so `heart_amplitude` plays the same role as the
breathing depth does for the sinusoidal breath term.
"""

from abc import ABC, abstractmethod
import logging

import numpy as np

from ..utils.errors import DomainError

logger = logging.getLogger(__name__)


class BasePulse(ABC):
    """Abstract base class for all pulse shapes."""

    @abstractmethod
    def __call__(self, phase: np.ndarray) -> np.ndarray:
        """
        Evaluates the pulse train.

        Args:
            phase (np.ndarray): Phase in radians; one period is 2*pi.

        Returns:
            np.ndarray: Zero-mean samples of the same shape.
        """
        pass


class SinusoidPulse(BasePulse):
    """A plain sinusoid, convenient for analytic tests."""

    def __call__(self, phase: np.ndarray) -> np.ndarray:
        return np.sin(phase)


class RaisedCosinePulse(BasePulse):
    """
    A raised-cosine pulse train.

    Each beat is a single raised-cosine bump occupying `duty` of the period,
    followed by rest. Sharper than a sinusoid, it carries realistic harmonics.
    """

    def __init__(self, duty: float = 0.5):
        if not 0.0 < duty <= 1.0:
            raise DomainError(f"Pulse duty must be in (0, 1], got {duty}")
        self.duty = duty
        logger.debug(f"Initialized RaisedCosinePulse with duty={duty}")

    def __call__(self, phase: np.ndarray) -> np.ndarray:
        u = np.mod(np.asarray(phase, dtype=float) / (2.0 * np.pi), 1.0)
        bump = np.where(u < self.duty, 0.5 * (1.0 - np.cos(2.0 * np.pi * u / self.duty)), 0.0)
        # The bump averages duty/2 over a period.
        return 2.0 * (bump - self.duty / 2.0)
