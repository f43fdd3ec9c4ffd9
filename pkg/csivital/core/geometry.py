"""
Fresnel-zone geometry for a transmit/receive antenna pair.

A point Q lies on the boundary of the n-th Fresnel zone when
|TxQ| + |QRx| - |TxRx| = n * wavelength / 2. The functions here compute that
excess path length, the continuous zone coordinate, zone radii, how much of a
body motion actually lengthens the reflected path, and a placement score that
favours points deep inside odd zones.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.optimize import bisect

from ..utils.data_models import AntennaPair, MotionVector, Point3
from ..utils.errors import DomainError

logger = logging.getLogger(__name__)

BOUNDARY_TOLERANCE = 1e-9
_ANTENNA_EPS = 1e-12


def path_delta(pair: AntennaPair, q: Point3) -> float:
    """Excess length |TxQ| + |QRx| - |TxRx| of the path reflected at q, in meters."""
    p = q.as_array()
    tx = pair.tx.as_array()
    rx = pair.rx.as_array()
    delta = np.linalg.norm(p - tx) + np.linalg.norm(p - rx) - np.linalg.norm(rx - tx)
    # Rounding can leave a tiny negative value for points on the segment.
    return max(float(delta), 0.0)


def zone_index(pair: AntennaPair, q: Point3) -> float:
    """Continuous zone coordinate n = 2 * path_delta / wavelength; q is in zone floor(n) + 1."""
    return 2.0 * path_delta(pair, q) / pair.wavelength


def _perpendicular_unit(axis: np.ndarray) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    helper = np.eye(3)[int(np.argmin(np.abs(axis)))]
    perp = np.cross(axis, helper)
    return perp / np.linalg.norm(perp)


def first_zone_radius_at(pair: AntennaPair, s: float) -> float:
    """
    Radius of the first Fresnel zone at fraction s along the line of sight.

    Solved by bisection on the perpendicular offset until zone_index == 1.

    Args:
        pair (AntennaPair): The antenna pair.
        s (float): Position along Tx->Rx, strictly between 0 and 1.

    Returns:
        float: The perpendicular offset r (meters) of the first-zone boundary.

    Raises:
        DomainError: If s is not in the open interval (0, 1).
    """
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie strictly between 0 and 1, got {s}")

    tx = pair.tx.as_array()
    rx = pair.rx.as_array()
    axis = rx - tx
    foot = tx + s * axis
    perp = _perpendicular_unit(axis)
    target = pair.wavelength / 2.0

    def excess(r: float) -> float:
        return path_delta(pair, Point3.from_sequence(foot + r * perp)) - target

    hi = max(pair.wavelength, pair.los_length)
    while excess(hi) < 0:
        hi *= 2.0
    # The function tolerance on zone_index maps to a much tighter xtol on r near the foci.
    radius = bisect(excess, 0.0, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
    logger.debug(f"First-zone radius at s={s}: {radius:.9f} m")
    return float(radius)


def first_zone_radius_exact(pair: AntennaPair, s: float) -> float:
    """Closed-form first-zone radius from the ellipsoid semi-axes."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie strictly between 0 and 1, got {s}")
    d = pair.los_length
    a = (d + pair.wavelength / 2.0) / 2.0
    b_sq = a * a - (d / 2.0) ** 2
    x = (s - 0.5) * d
    return math.sqrt(b_sq * (1.0 - (x * x) / (a * a)))


def path_gradient(pair: AntennaPair, q: Point3) -> np.ndarray:
    """Gradient of path_delta with respect to q: the sum of the unit vectors Tx->q and Rx->q."""
    p = q.as_array()
    from_tx = p - pair.tx.as_array()
    from_rx = p - pair.rx.as_array()
    n_tx = np.linalg.norm(from_tx)
    n_rx = np.linalg.norm(from_rx)
    if n_tx < _ANTENNA_EPS or n_rx < _ANTENNA_EPS:
        raise DomainError(f"Point {q} coincides with an antenna; gradient is undefined.")
    return from_tx / n_tx + from_rx / n_rx


def motion_coupling(pair: AntennaPair, q: Point3, direction: Sequence[float]) -> float:
    """Signed change of reflected path length per meter of motion along `direction`."""
    return float(np.dot(path_gradient(pair, q), np.asarray(direction, dtype=float)))


def effective_displacement(pair: AntennaPair, q: Point3, motion: MotionVector) -> float:
    """
    Path-length change produced by a body motion, in meters.

    Only the motion component along the ellipsoid normal at q lengthens the
    reflected path, so the result lies in [0, 2 * amplitude].
    """
    return abs(motion_coupling(pair, q, motion.direction)) * motion.amplitude


def parity_factor(n: float) -> float:
    """1 at odd-zone centers, 0 at even-zone centers, 0.5 on zone boundaries (period 2 in n)."""
    return math.cos(math.pi * (n - 0.5) / 2.0) ** 2


def placement_score(pair: AntennaPair, body_point: Point3, motion: MotionVector) -> float:
    """Effective displacement weighted by how close the body sits to an odd-zone center."""
    n = zone_index(pair, body_point)
    return effective_displacement(pair, body_point, motion) * parity_factor(n)


@dataclass(frozen=True)
class Placement:
    name: str
    pair: AntennaPair
    body_point: Point3
    motion: MotionVector


@dataclass(frozen=True)
class RankedPlacement:
    name: str
    zone_index: float
    effective_displacement: float
    parity_factor: float
    score: float


def rank_placements(candidates: Sequence[Placement]) -> List[RankedPlacement]:
    """Scores every candidate and sorts by score, best first (stable for ties)."""
    ranked = []
    for candidate in candidates:
        n = zone_index(candidate.pair, candidate.body_point)
        eff = effective_displacement(candidate.pair, candidate.body_point, candidate.motion)
        factor = parity_factor(n)
        ranked.append(RankedPlacement(candidate.name, n, eff, factor, eff * factor))
        logger.debug(f"Candidate '{candidate.name}': zone {n:.3f}, score {eff * factor:.3e}")
    return sorted(ranked, key=lambda r: r.score, reverse=True)
