"""Straight and RF-leg (constant-radius arc) trajectories between two fixes.

An arc is parameterized by its signed half arc angle ``theta``: the tangent at
the entry fix leans ``theta`` away from the entry->exit chord, so the full arc
turns through ``2*theta`` and has radius ``chord / (2 sin|theta|)``. Positive
``theta`` bulges to the left of the entry->exit direction.

Positions are computed in the chord frame with the chord-of-circle identity
(distance from the start after arc length ``u`` is ``2 rho sin(alpha/2)``),
which stays accurate as ``theta -> 0`` where the radius blows up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TIME_EPS, FlightSpec, Point, Sector

# Half-angle cap of the arc model; at pi/2 the chord is a diameter.
THETA_CAP = math.pi / 2
_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class ArcSpec:
    """Circular arc through two fixes.

    ``sweep`` is ``2*theta``; a positive sweep turns clockwise (the arc bulges
    left of the chord, so the aircraft turns right along it).
    """

    center: Point
    radius: float
    start_angle: float
    sweep: float
    chord: float


def _frame(entry: Point, exit: Point) -> tuple[float, np.ndarray, np.ndarray]:
    d = np.array([exit[0] - entry[0], exit[1] - entry[1]], dtype=float)
    chord = float(math.hypot(d[0], d[1]))
    if chord == 0.0:
        raise ValueError("entry and exit coincide")
    u = d / chord
    n = np.array([-u[1], u[0]])
    return chord, u, n


def path_ratio(theta: float) -> float:
    """Arc length over chord length, ``theta / sin(theta)``, even in theta."""
    a = abs(theta)
    if a > THETA_CAP + 1e-12:
        raise ValueError(f"|theta| must be <= pi/2, got {theta}")
    if a < _SERIES_CUTOFF:
        a2 = a * a
        return 1.0 + a2 / 6.0 + 7.0 * a2 * a2 / 360.0
    return a / math.sin(a)


def path_length(entry: Point, exit: Point, theta: float) -> float:
    chord = math.hypot(exit[0] - entry[0], exit[1] - entry[1])
    return chord * path_ratio(theta)


def flight_path_length(flight: FlightSpec, theta: float) -> float:
    return flight.chord * path_ratio(theta)


def exit_time(flight: FlightSpec, theta: float) -> float:
    return flight.release_time + flight_path_length(flight, theta) / flight.speed


def arc_spec(entry: Point, exit: Point, theta: float) -> ArcSpec:
    """Build the arc through ``entry`` and ``exit`` with half arc angle ``|theta|``."""
    if theta == 0:
        raise ValueError("theta = 0 is a straight path; no arc exists")
    if abs(theta) > THETA_CAP:
        raise ValueError(f"|theta| must be <= pi/2, got {theta}")
    chord, u, n = _frame(entry, exit)
    sgn = 1.0 if theta > 0 else -1.0
    a = abs(theta)
    radius = chord / (2.0 * math.sin(a))
    mid = np.array([(entry[0] + exit[0]) / 2.0, (entry[1] + exit[1]) / 2.0])
    center = mid - sgn * n * radius * math.cos(a)
    start_angle = math.atan2(entry[1] - center[1], entry[0] - center[0])
    return ArcSpec(
        center=(float(center[0]), float(center[1])),
        radius=radius,
        start_angle=start_angle,
        sweep=2.0 * theta,
        chord=chord,
    )


def _local_offsets(chord: float, theta: float, travelled: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Along-chord and left-normal offsets after ``travelled`` arc length."""
    if theta == 0:
        return travelled, np.zeros_like(travelled)
    a = abs(theta)
    sin_a = math.sin(a)
    half_turn = travelled * sin_a / chord  # alpha/2 = u / (2 rho)
    dist = chord * np.sin(half_turn) / sin_a
    lean = a - half_turn
    sgn = 1.0 if theta > 0 else -1.0
    return dist * np.cos(lean), sgn * dist * np.sin(lean)


def positions_along(flight: FlightSpec, theta: float, travelled) -> np.ndarray:
    """Planar points after travelling the given arc lengths from the entry fix."""
    travelled = np.asarray(travelled, dtype=float)
    chord, u, n = _frame(flight.entry, flight.exit)
    along, left = _local_offsets(chord, theta, travelled)
    out = np.empty(travelled.shape + (2,))
    out[..., 0] = flight.entry[0] + along * u[0] + left * n[0]
    out[..., 1] = flight.entry[1] + along * u[1] + left * n[1]
    return out


def _check_airborne(flight: FlightSpec, theta: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    t_exit = exit_time(flight, theta)
    if np.any(t < flight.release_time - TIME_EPS) or np.any(t > t_exit + TIME_EPS):
        raise ValueError(
            f"time outside airborne interval [{flight.release_time}, {t_exit}] of flight {flight.id!r}"
        )
    return t


def arc_position(flight: FlightSpec, theta: float, t):
    """Position at time ``t`` (scalar or array) flying the arc at constant speed."""
    t = _check_airborne(flight, theta, t)
    length = flight_path_length(flight, theta)
    travelled = np.clip((t - flight.release_time) * flight.speed, 0.0, length)
    p = positions_along(flight, theta, travelled)
    if p.ndim == 1:
        return float(p[0]), float(p[1])
    return p


def straight_position(flight: FlightSpec, t):
    return arc_position(flight, 0.0, t)


def airborne_samples(flight: FlightSpec, theta: float, sector: Sector, dt: float) -> tuple[int, int]:
    """Inclusive-exclusive range ``[k_lo, k_hi)`` of grid samples where the flight is airborne."""
    t0 = max(flight.release_time, sector.t_start)
    t1 = min(exit_time(flight, theta), sector.t_end)
    if t1 < t0 - TIME_EPS:
        return 0, 0
    k_lo = math.ceil((t0 - sector.t_start - TIME_EPS) / dt)
    k_hi = math.floor((t1 - sector.t_start + TIME_EPS) / dt) + 1
    k_hi = min(k_hi, sector.sample_count(dt))
    k_lo = max(k_lo, 0)
    # guard the rounding of the ceil/floor against the exact interval
    while k_lo < k_hi and sector.t_start + k_lo * dt < t0 - TIME_EPS:
        k_lo += 1
    while k_hi > k_lo and sector.t_start + (k_hi - 1) * dt > t1 + TIME_EPS:
        k_hi -= 1
    return k_lo, max(k_hi, k_lo)


@dataclass(frozen=True)
class Track:
    """Sampled trajectory: positions ``xy[j]`` at grid sample ``k_lo + j``."""

    k_lo: int
    xy: np.ndarray

    @property
    def k_hi(self) -> int:
        return self.k_lo + len(self.xy)


def sample_track(flight: FlightSpec, theta: float, sector: Sector, dt: float) -> Track:
    k_lo, k_hi = airborne_samples(flight, theta, sector, dt)
    if k_hi <= k_lo:
        return Track(0, np.empty((0, 2)))
    t = sector.t_start + dt * np.arange(k_lo, k_hi)
    length = flight_path_length(flight, theta)
    travelled = np.clip((t - flight.release_time) * flight.speed, 0.0, length)
    return Track(k_lo, positions_along(flight, theta, travelled))


def peak_simultaneous(scenario, theta, dt: float) -> int:
    """Largest number of flights airborne at one grid sample."""
    count = np.zeros(scenario.sector.sample_count(dt) + 1, dtype=int)
    for f, th in zip(scenario.flights, np.asarray(theta, dtype=float).tolist()):
        lo, hi = airborne_samples(f, th, scenario.sector, dt)
        if hi > lo:
            count[lo] += 1
            count[hi] -= 1
    return int(np.cumsum(count).max()) if len(count) else 0
