"""Domain types shared across the package.

Units are fixed everywhere: nautical miles, knots, hours. Angles are radians
internally (files use degrees, see :mod:`crp3d.report`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple, Sequence

import numpy as np

Point = tuple[float, float]

# Tolerance used when deciding whether a sample time lies inside an interval.
TIME_EPS = 1e-12
# Tolerance for "point lies on the sector boundary".
BOUNDARY_EPS = 1e-9


class ScenarioError(ValueError):
    """Raised when a scenario or parameter set violates its invariants."""


@dataclass(frozen=True)
class FlightSpec:
    id: str
    entry: Point
    exit: Point
    release_time: float
    speed: float

    def __post_init__(self):
        object.__setattr__(self, "entry", (float(self.entry[0]), float(self.entry[1])))
        object.__setattr__(self, "exit", (float(self.exit[0]), float(self.exit[1])))
        object.__setattr__(self, "release_time", float(self.release_time))
        object.__setattr__(self, "speed", float(self.speed))

    @property
    def chord(self) -> float:
        return math.hypot(self.exit[0] - self.entry[0], self.exit[1] - self.entry[1])


@dataclass(frozen=True)
class Sector:
    width: float
    height: float
    level_count: int
    time_window: tuple[float, float] = (0.0, 1.0)

    @property
    def t_start(self) -> float:
        return self.time_window[0]

    @property
    def t_end(self) -> float:
        return self.time_window[1]

    def on_boundary(self, p: Point) -> bool:
        x, y = p
        inside = -BOUNDARY_EPS <= x <= self.width + BOUNDARY_EPS and (
            -BOUNDARY_EPS <= y <= self.height + BOUNDARY_EPS
        )
        on_edge = (
            abs(x) <= BOUNDARY_EPS
            or abs(x - self.width) <= BOUNDARY_EPS
            or abs(y) <= BOUNDARY_EPS
            or abs(y - self.height) <= BOUNDARY_EPS
        )
        return inside and on_edge

    def sample_count(self, dt: float) -> int:
        """Number of grid samples ``t_k = t_start + k*dt`` inside the window."""
        return int(math.floor((self.t_end - self.t_start) / dt + 1e-9)) + 1

    def sample_times(self, dt: float) -> np.ndarray:
        return self.t_start + dt * np.arange(self.sample_count(dt))


@dataclass(frozen=True)
class Scenario:
    sector: Sector
    flights: tuple[FlightSpec, ...]

    def __len__(self) -> int:
        return len(self.flights)

    def index_of(self, flight_id: str) -> int:
        for i, f in enumerate(self.flights):
            if f.id == flight_id:
                return i
        raise KeyError(flight_id)


class PosTime(NamedTuple):
    """A 4D event coordinate: planar position, flight-level index, time."""

    x: float
    y: float
    level: int
    t: float


@dataclass(frozen=True)
class MinDistanceEvent:
    """Closest approach of two same-level flights on the sample grid.

    ``flight_a``/``flight_b`` are dense flight indices (``flight_a < flight_b``).
    """

    flight_a: int
    flight_b: int
    distance: float
    time: float
    event_a: PosTime
    event_b: PosTime


@dataclass
class Assignment:
    """Mutable solution state: flight-level index and arc half-angle per flight."""

    level: np.ndarray
    theta: np.ndarray

    @classmethod
    def straight(cls, n: int, level: int = 0) -> "Assignment":
        return cls(np.full(n, level, dtype=int), np.zeros(n))

    def copy(self) -> "Assignment":
        return Assignment(self.level.copy(), self.theta.copy())

    def __len__(self) -> int:
        return len(self.level)

    def flights_on(self, level: int) -> np.ndarray:
        return np.flatnonzero(self.level == level)


@dataclass(frozen=True)
class SolverParams:
    s: float = 5.0
    s0: float = 0.625
    V0: float = 533.0
    dt: float = 2.5 / 3600.0
    N: int = 10
    R: int = 2
    r: int = 1
    theta_low: float = math.radians(-25.0)
    theta_high: float = math.radians(25.0)
    eta0: float = math.radians(2.0)
    T_GD: float = 1e-7
    T_GD_prime: float = 1e-3
    W_U: float = 1.5
    W_D: float = 0.5
    gd_max_steps: int = 500
    fd_step: float = math.radians(0.25)
    rng_seed: int = 0

    def __post_init__(self):
        problems = []
        if not self.s > 0:
            problems.append("s must be > 0")
        if not self.s0 >= 0:
            problems.append("s0 must be >= 0")
        if not self.V0 > 0:
            problems.append("V0 must be > 0")
        if not self.dt > 0:
            problems.append("dt must be > 0")
        if self.N < 0 or self.R < 0 or self.r < 1:
            problems.append("N, R must be >= 0 and r >= 1")
        if not 0 < self.T_GD < self.T_GD_prime:
            problems.append("need 0 < T_GD < T_GD_prime")
        if not 0 < self.W_D < 1 < self.W_U:
            problems.append("need 0 < W_D < 1 < W_U")
        if not self.theta_low < 0 < self.theta_high:
            problems.append("need theta_low < 0 < theta_high")
        if max(-self.theta_low, self.theta_high) > math.pi / 2:
            problems.append("theta bounds must lie within [-pi/2, pi/2]")
        if not self.eta0 > 0 or not self.fd_step > 0:
            problems.append("eta0 and fd_step must be > 0")
        if self.gd_max_steps < 1:
            problems.append("gd_max_steps must be >= 1")
        if problems:
            raise ScenarioError("; ".join(problems))

    @property
    def s_prime(self) -> float:
        return self.s + self.s0

    def with_overrides(self, **overrides) -> "SolverParams":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ScenarioError(f"unknown parameter(s): {sorted(unknown)}")
        return replace(self, **overrides)


@dataclass
class IterationMetrics:
    iteration: int
    conflicting_flights: int
    violating_pairs: int


@dataclass
class FlightResult:
    level: int
    theta: float
    path_length: float
    extension_ratio: float


@dataclass
class SolutionReport:
    final_assignment: Assignment
    per_iteration: list[IterationMetrics]
    unresolved_flights: list[str]
    per_flight: list[FlightResult]
    peak_simultaneous: int
    iterations_run: int = 0
    converged: bool = False
    flight_ids: list[str] = field(default_factory=list)


def validate_scenario(sector: Sector, flights: Sequence[FlightSpec]) -> Scenario:
    """Check flight and sector invariants and return an immutable scenario."""
    if not (sector.width > 0 and sector.height > 0):
        raise ScenarioError("sector dimensions must be positive")
    if sector.level_count < 1:
        raise ScenarioError("sector needs at least one flight level")
    if not sector.t_start < sector.t_end:
        raise ScenarioError("time window must satisfy t_start < t_end")
    seen = set()
    for f in flights:
        if f.id in seen:
            raise ScenarioError(f"duplicate id: {f.id!r}")
        seen.add(f.id)
        if f.chord <= 0:
            raise ScenarioError(f"degenerate flight {f.id!r}: entry equals exit")
        if not f.speed > 0:
            raise ScenarioError(f"nonpositive speed for flight {f.id!r}")
        if f.release_time < 0:
            raise ScenarioError(f"negative release time for flight {f.id!r}")
        for name, p in (("entry", f.entry), ("exit", f.exit)):
            if not sector.on_boundary(p):
                raise ScenarioError(f"{name} of flight {f.id!r} is off the sector boundary: {p}")
    return Scenario(sector, tuple(flights))
