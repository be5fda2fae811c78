"""Min-distance events, position-time distance and conflict contribution scores.

Separation is checked by an exhaustive scan of the sample grid
``t_k = t_start + k*dt``; a pair is only compared at samples where both
flights are airborne.

Contribution score of event ``p`` (owned by flight ``a``) against event ``q``
(owned by ``a'``)::

    ccs(p|q) = max(0, s' - ptd(p, q))   if a != a' and d(a, a') <= s'
             = 0                        otherwise

with ``s' = s + s0`` and ``d(a, a')`` the planar minimum distance of the two
owning flights. The score decreases with distance, so minimizing the total
pushes events apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import Track, sample_track
from .model import Assignment, MinDistanceEvent, PosTime, Scenario, SolverParams

# Samples whose distance is within this of the minimum count as ties (earliest wins).
TIE_EPS = 1e-9

PairKey = tuple[int, int]


def pair_key(a: int, b: int) -> PairKey:
    return (a, b) if a < b else (b, a)


def closest_approach(ta: Track, tb: Track):
    """Grid argmin of the planar distance of two tracks.

    Returns ``(distance, sample_index, xy_a, xy_b)`` or ``None`` when the
    tracks share no sample.
    """
    lo = max(ta.k_lo, tb.k_lo)
    hi = min(ta.k_hi, tb.k_hi)
    if hi <= lo:
        return None
    pa = ta.xy[lo - ta.k_lo : hi - ta.k_lo]
    pb = tb.xy[lo - tb.k_lo : hi - tb.k_lo]
    d = np.hypot(pa[:, 0] - pb[:, 0], pa[:, 1] - pb[:, 1])
    j = int(np.argmax(d <= d.min() + TIE_EPS))
    return float(d[j]), lo + j, pa[j], pb[j]


def make_event(a: int, b: int, level: int, approach, sector_t_start: float, dt: float) -> MinDistanceEvent:
    d, k, pa, pb = approach
    t = sector_t_start + k * dt
    if a > b:
        a, b, pa, pb = b, a, pb, pa
    return MinDistanceEvent(
        flight_a=a,
        flight_b=b,
        distance=d,
        time=t,
        event_a=PosTime(float(pa[0]), float(pa[1]), int(level), t),
        event_b=PosTime(float(pb[0]), float(pb[1]), int(level), t),
    )


def min_distance_event(
    scenario: Scenario, assignment: Assignment, a: int, b: int, params: SolverParams
) -> MinDistanceEvent | None:
    """Closest approach of flights ``a`` and ``b`` under the current assignment."""
    if assignment.level[a] != assignment.level[b]:
        raise ValueError(f"flights {a} and {b} are on different levels")
    sector = scenario.sector
    ta = sample_track(scenario.flights[a], float(assignment.theta[a]), sector, params.dt)
    tb = sample_track(scenario.flights[b], float(assignment.theta[b]), sector, params.dt)
    approach = closest_approach(ta, tb)
    if approach is None:
        return None
    return make_event(a, b, int(assignment.level[a]), approach, sector.t_start, params.dt)


def ptd(p: PosTime, q: PosTime, V0: float) -> float:
    """Position-time distance; infinite across flight levels."""
    if p.level != q.level:
        return math.inf
    return math.sqrt((p.x - q.x) ** 2 + (p.y - q.y) ** 2 + (V0 * (p.t - q.t)) ** 2)


def ccs_pair(
    p: PosTime, q: PosTime, owner_p: int, owner_q: int, owner_distance: float, params: SolverParams
) -> float:
    """Score of ``p`` against ``q``; ``owner_distance`` is the owners' min distance."""
    if owner_p == owner_q or owner_distance > params.s_prime:
        return 0.0
    return max(0.0, params.s_prime - ptd(p, q, params.V0))


@dataclass
class EventArray:
    """Columnar set of event halves (one row per flight per min-distance event)."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    level: np.ndarray
    flight: np.ndarray
    partner: np.ndarray

    @classmethod
    def from_events(cls, events: Iterable[MinDistanceEvent]) -> "EventArray":
        rows = []
        for e in events:
            rows.append((*e.event_a, e.flight_a, e.flight_b))
            rows.append((*e.event_b, e.flight_b, e.flight_a))
        if not rows:
            z = np.empty(0)
            zi = np.empty(0, dtype=int)
            return cls(z, z.copy(), z.copy(), zi, zi.copy(), zi.copy())
        arr = np.array(rows, dtype=float)
        return cls(
            arr[:, 0], arr[:, 1], arr[:, 3], arr[:, 2].astype(int), arr[:, 4].astype(int), arr[:, 5].astype(int)
        )

    def __len__(self) -> int:
        return len(self.x)

    def postime(self, i: int) -> PosTime:
        return PosTime(float(self.x[i]), float(self.y[i]), int(self.level[i]), float(self.t[i]))

    def embedded(self, V0: float) -> np.ndarray:
        return np.column_stack([self.x, self.y, V0 * self.t])

    def subset(self, idx) -> "EventArray":
        idx = np.asarray(idx, dtype=int)
        return EventArray(
            self.x[idx], self.y[idx], self.t[idx], self.level[idx], self.flight[idx], self.partner[idx]
        )


def owner_distance_matrix(
    flights: np.ndarray, pair_distance: Mapping[PairKey, float]
) -> np.ndarray:
    """Min distances between owning flights, ``inf`` where the pair never overlaps."""
    n = len(flights)
    D = np.full((n, n), np.inf)
    for i in range(n):
        fi = int(flights[i])
        for j in range(i + 1, n):
            d = pair_distance.get(pair_key(fi, int(flights[j])))
            if d is not None:
                D[i, j] = D[j, i] = d
    return D


def ccs_matrix(
    events: EventArray, pair_distance: Mapping[PairKey, float], params: SolverParams
) -> np.ndarray:
    """Matrix ``C[i, j] = ccs(event_i | event_j)``."""
    n = len(events)
    if n == 0:
        return np.zeros((0, 0))
    owners, inv = np.unique(events.flight, return_inverse=True)
    D = owner_distance_matrix(owners, pair_distance)
    gate = D[inv[:, None], inv[None, :]] <= params.s_prime
    gate &= events.flight[:, None] != events.flight[None, :]
    gate &= events.level[:, None] == events.level[None, :]
    P = events.embedded(params.V0)
    dist = cdist(P, P)
    C = np.where(gate, np.maximum(0.0, params.s_prime - dist), 0.0)
    np.fill_diagonal(C, 0.0)
    return C


def ccs_scores(
    events: EventArray, pair_distance: Mapping[PairKey, float], params: SolverParams
) -> np.ndarray:
    """``ccs(p | M')`` for every event ``p`` of the set ``M'``."""
    return ccs_matrix(events, pair_distance, params).sum(axis=1)


def ccs_event(
    i: int, events: EventArray, pair_distance: Mapping[PairKey, float], params: SolverParams
) -> float:
    return float(ccs_scores(events, pair_distance, params)[i])


def tcs(events: EventArray, pair_distance: Mapping[PairKey, float], params: SolverParams) -> float:
    """Total conflict score, the sum of every event's contribution score."""
    return float(ccs_matrix(events, pair_distance, params).sum())


def flight_scores(
    events: EventArray, pair_distance: Mapping[PairKey, float], params: SolverParams
) -> dict[int, float]:
    """Score of each flight: its most dangerous event contribution."""
    scores = ccs_scores(events, pair_distance, params)
    out: dict[int, float] = {}
    for f, sc in zip(events.flight.tolist(), scores.tolist()):
        if f not in out or sc > out[f]:
            out[f] = sc
    return out


def flight_score(
    flight: int, events: EventArray, pair_distance: Mapping[PairKey, float], params: SolverParams
) -> float:
    scores = flight_scores(events, pair_distance, params)
    if flight not in scores:
        raise ValueError(f"flight {flight} has no events in the set")
    return scores[flight]


@dataclass
class ConflictReport:
    """Result of scanning every same-level pair.

    ``pair_distance`` holds the min distance of every same-level pair that
    shares at least one sample; ``events`` only the separation violations.
    """

    events: dict[int, list[MinDistanceEvent]] = field(default_factory=dict)
    pair_distance: dict[PairKey, float] = field(default_factory=dict)

    @property
    def violating_pairs(self) -> int:
        return sum(len(v) for v in self.events.values())

    @property
    def flights(self) -> list[int]:
        out = set()
        for evs in self.events.values():
            for e in evs:
                out.add(e.flight_a)
                out.add(e.flight_b)
        return sorted(out)

    def level_events(self, level: int) -> EventArray:
        return EventArray.from_events(self.events.get(level, []))

    def any(self) -> bool:
        return self.violating_pairs > 0


def scan_pairs(
    tracks: Mapping[int, Track],
    flights: Sequence[int],
    level: int,
    sector_t_start: float,
    params: SolverParams,
    pair_distance: dict[PairKey, float],
) -> list[MinDistanceEvent]:
    """Scan every pair of ``flights`` (all on ``level``); return the violating events."""
    order = sorted((int(f) for f in flights), key=lambda f: (tracks[f].k_lo, f))
    violating = []
    for i, a in enumerate(order):
        ta = tracks[a]
        if len(ta.xy) == 0:
            continue
        for b in order[i + 1 :]:
            tb = tracks[b]
            if tb.k_lo >= ta.k_hi:
                break
            approach = closest_approach(ta, tb)
            if approach is None:
                continue
            pair_distance[pair_key(a, b)] = approach[0]
            if approach[0] < params.s:
                violating.append(make_event(a, b, level, approach, sector_t_start, params.dt))
    violating.sort(key=lambda e: (e.flight_a, e.flight_b))
    return violating


def sample_tracks(scenario: Scenario, assignment: Assignment, params: SolverParams, flights=None) -> dict[int, Track]:
    if flights is None:
        flights = range(len(scenario))
    return {
        int(f): sample_track(scenario.flights[f], float(assignment.theta[f]), scenario.sector, params.dt)
        for f in flights
    }


def detect_conflicts(
    scenario: Scenario, assignment: Assignment, params: SolverParams, levels: Iterable[int] | None = None
) -> ConflictReport:
    """Find every separation violation (distance < s) between same-level flights."""
    if len(assignment) != len(scenario):
        raise ValueError("assignment does not cover the scenario's flights")
    tracks = sample_tracks(scenario, assignment, params)
    report = ConflictReport()
    if levels is None:
        levels = range(scenario.sector.level_count)
    for level in levels:
        members = assignment.flights_on(level)
        evs = scan_pairs(tracks, members, level, scenario.sector.t_start, params, report.pair_distance)
        if evs:
            report.events[level] = evs
    return report
