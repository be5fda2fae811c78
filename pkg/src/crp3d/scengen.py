"""Seeded random traffic for a rectangular sector.

Flights enter and leave through designated boundary fixes spaced evenly along
each edge (corners excluded), never entering and leaving through the same edge.
Releases happen on a slot grid and no fix releases two flights in one slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import peak_simultaneous
from .model import FlightSpec, Scenario, ScenarioError, Sector, validate_scenario

MAX_ATTEMPTS_PER_FLIGHT = 1000


@dataclass(frozen=True)
class GenConfig:
    width: float = 54.0
    height: float = 64.8
    spacing: float = 5.4
    flights: int = 320
    horizon: float = 1.0
    slot: float = 0.02
    speed: float = 533.0
    level_count: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.flights < 0:
            raise ScenarioError("flight count must be >= 0")
        if not (self.width > 0 and self.height > 0 and self.spacing > 0):
            raise ScenarioError("sector dimensions and spacing must be positive")
        if not (self.horizon > 0 and self.slot > 0 and self.speed > 0):
            raise ScenarioError("horizon, slot and speed must be positive")
        if self.level_count < 1:
            raise ScenarioError("need at least one flight level")
        for name, length in (("width", self.width), ("height", self.height)):
            _divisions(length, self.spacing, name)

    @property
    def slot_count(self) -> int:
        return _divisions(self.horizon, self.slot, "horizon")

    def sector(self) -> Sector:
        return Sector(self.width, self.height, self.level_count, (0.0, self.horizon))


def _divisions(length: float, step: float, name: str) -> int:
    q = length / step
    n = round(q)
    if n < 1 or abs(q - n) > 1e-9 * max(1.0, q):
        raise ScenarioError(f"spacing {step} does not divide {name} {length}")
    return n


def boundary_points(config: GenConfig) -> list[tuple[tuple[float, float], int]]:
    """Designated fixes as ``((x, y), edge)``; edges are 0 bottom, 1 right, 2 top, 3 left."""
    W, H, sp = config.width, config.height, config.spacing
    nx = _divisions(W, sp, "width")
    ny = _divisions(H, sp, "height")
    if nx < 2 or ny < 2:
        raise ScenarioError("spacing leaves an edge without interior fixes")
    pts = []
    pts += [((k * sp, 0.0), 0) for k in range(1, nx)]
    pts += [((W, k * sp), 1) for k in range(1, ny)]
    pts += [((k * sp, H), 2) for k in range(1, nx)]
    pts += [((0.0, k * sp), 3) for k in range(1, ny)]
    return pts


def generate(config: GenConfig) -> Scenario:
    rng = np.random.default_rng(config.seed)
    sector = config.sector()
    pts = boundary_points(config) if config.flights else []
    n_slots = config.slot_count
    if config.flights > len(pts) * n_slots:
        raise ScenarioError(
            f"{config.flights} flights exceed release capacity {len(pts) * n_slots} "
            f"({len(pts)} fixes x {n_slots} slots)"
        )
    edges = np.array([e for _, e in pts])
    other_edge = {e: np.flatnonzero(edges != e) for e in range(4)}
    used: set[tuple[int, int]] = set()
    flights = []
    for i in range(config.flights):
        for _ in range(MAX_ATTEMPTS_PER_FLIGHT):
            entry = int(rng.integers(len(pts)))
            choices = other_edge[pts[entry][1]]
            exit_ = int(choices[rng.integers(len(choices))])
            slot = int(rng.integers(n_slots))
            if (entry, slot) not in used:
                break
        else:
            raise ScenarioError(
                f"could not place flight {i} after {MAX_ATTEMPTS_PER_FLIGHT} draws; "
                f"{len(used)} of {len(pts) * n_slots} (fix, slot) releases taken"
            )
        used.add((entry, slot))
        flights.append(
            FlightSpec(
                id=f"F{i:04d}",
                entry=pts[entry][0],
                exit=pts[exit_][0],
                release_time=slot * config.slot,
                speed=config.speed,
            )
        )
    return validate_scenario(sector, flights)


def capacity(config: GenConfig) -> int:
    return len(boundary_points(config)) * config.slot_count


def straight_peak(scenario: Scenario, dt: float) -> int:
    """Peak simultaneous airborne count with every flight on its straight path."""
    return peak_simultaneous(scenario, np.zeros(len(scenario)), dt)


def release_fix_counts(scenario: Scenario) -> dict[tuple[tuple[float, float], float], int]:
    out: dict = {}
    for f in scenario.flights:
        key = (f.entry, round(f.release_time, 9))
        out[key] = out.get(key, 0) + 1
    return out
