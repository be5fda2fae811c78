"""Planar conflict resolution by bending flights onto RF-leg arcs.

Violating events of one level are clustered; each cluster's total conflict
score is then minimized over the arc half-angles of the cluster's flights by
normalized gradient descent with an adaptive step size. The gradient is taken
by central finite differences because the objective is built from grid-sampled
minima and has no usable analytic derivative.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .clustering import cluster_level_events
from .conflict import (
    EventArray,
    PairKey,
    closest_approach,
    make_event,
    pair_key,
    scan_pairs,
    tcs,
)
from .geometry import Track, sample_track
from .model import MinDistanceEvent, Scenario, SolverParams

log = logging.getLogger(__name__)

MIN_ETA = 1e-12


class StepAction(enum.Enum):
    BACKTRACK = "backtrack"
    TERMINATE = "terminate"
    SPEED_UP = "speed_up"
    HOLD = "hold"


def descent_step_rules(improvement: float, eta: float, params: SolverParams) -> tuple[StepAction, float]:
    """Decide what to do with a trial step given its tcs improvement.

    ``improvement`` is ``tcs(before) - tcs(after)``; negative means worse.
    Returns the action and the learning rate to use next.
    """
    if improvement < 0:
        return StepAction.BACKTRACK, eta * params.W_D
    if improvement <= params.T_GD:
        return StepAction.TERMINATE, eta
    if improvement <= params.T_GD_prime:
        return StepAction.SPEED_UP, eta * params.W_U
    return StepAction.HOLD, eta


def clip_theta(theta, params: SolverParams) -> np.ndarray:
    return np.clip(np.asarray(theta, dtype=float), params.theta_low, params.theta_high)


def numerical_gradient(
    func: Callable[[np.ndarray], float],
    theta: np.ndarray,
    params: SolverParams,
    f0: float | None = None,
) -> np.ndarray:
    """Central differences, one-sided where a step would cross an angle bound."""
    theta = np.asarray(theta, dtype=float)
    h = params.fd_step
    grad = np.zeros_like(theta)
    for i in range(len(theta)):
        up_ok = theta[i] + h <= params.theta_high + 1e-15
        down_ok = theta[i] - h >= params.theta_low - 1e-15
        if up_ok and down_ok:
            tp = theta.copy()
            tp[i] += h
            tm = theta.copy()
            tm[i] -= h
            grad[i] = (func(tp) - func(tm)) / (2 * h)
            continue
        if f0 is None:
            f0 = func(theta)
        if down_ok:
            tm = theta.copy()
            tm[i] -= h
            grad[i] = (f0 - func(tm)) / h
        elif up_ok:
            tp = theta.copy()
            tp[i] += h
            grad[i] = (func(tp) - f0) / h
    return grad


def one_sided_gradient(
    func: Callable[[np.ndarray], float],
    theta: np.ndarray,
    params: SolverParams,
    f0: float,
) -> np.ndarray:
    """Forward or backward difference per component, toward the lower side.

    Used when central differences cancel exactly, e.g. at a symmetric crossing
    where bending either way lowers the score by the same amount. Components
    where neither side is lower come out zero.
    """
    theta = np.asarray(theta, dtype=float)
    h = params.fd_step
    grad = np.zeros_like(theta)
    for i in range(len(theta)):
        fp = fm = math.inf
        if theta[i] + h <= params.theta_high + 1e-15:
            tp = theta.copy()
            tp[i] += h
            fp = func(tp)
        if theta[i] - h >= params.theta_low - 1e-15:
            tm = theta.copy()
            tm[i] -= h
            fm = func(tm)
        if fp < f0 and fp <= fm:
            grad[i] = (fp - f0) / h
        elif fm < f0:
            grad[i] = (f0 - fm) / h
    return grad


@dataclass
class DescentStep:
    theta: np.ndarray
    tcs: float
    eta: float
    accepted: bool


@dataclass
class DescentTrace:
    steps: list[DescentStep] = field(default_factory=list)
    stop_reason: str = "converged"

    @property
    def accepted_tcs(self) -> list[float]:
        return [s.tcs for s in self.steps if s.accepted]

    @property
    def trials(self) -> int:
        # the first entry records the starting point, not a trial step
        return max(0, len(self.steps) - 1)


class ClusterObjective:
    """Total conflict score of a fixed set of event halves as a function of the free angles.

    ``rows`` are ``(owner, partner)`` flight pairs, one per event half; the
    event positions are recomputed from the current angles on every call.
    Flights outside ``free`` keep the angles in ``base_theta``.
    """

    def __init__(
        self,
        scenario: Scenario,
        level: int,
        rows: Sequence[tuple[int, int]],
        free: Sequence[int],
        base_theta: dict[int, float],
        params: SolverParams,
    ):
        self.scenario = scenario
        self.level = level
        self.rows = [(int(a), int(b)) for a, b in rows]
        self.free = [int(f) for f in free]
        self.params = params
        self.theta = dict(base_theta)
        owners = sorted({a for a, _ in self.rows})
        self.owners = owners
        keys = {pair_key(a, b) for a, b in self.rows}
        for i, a in enumerate(owners):
            for b in owners[i + 1 :]:
                keys.add(pair_key(a, b))
        self.keys = sorted(keys)
        self.flights = sorted({f for k in self.keys for f in k} | set(self.free))
        self._tracks: dict[tuple[int, float], Track] = {}
        self._pairs: dict[tuple[int, int, float, float], tuple | None] = {}
        self.evaluations = 0

    def _track(self, f: int, th: float) -> Track:
        key = (f, th)
        tr = self._tracks.get(key)
        if tr is None:
            tr = sample_track(self.scenario.flights[f], th, self.scenario.sector, self.params.dt)
            if len(self._tracks) > 4096:
                self._tracks.clear()
            self._tracks[key] = tr
        return tr

    def _approach(self, a: int, b: int, angles: dict[int, float]):
        ta, tb = angles[a], angles[b]
        key = (a, b, ta, tb)
        if key not in self._pairs:
            if len(self._pairs) > 16384:
                self._pairs.clear()
            self._pairs[key] = closest_approach(self._track(a, ta), self._track(b, tb))
        return self._pairs[key]

    def angles(self, free_theta) -> dict[int, float]:
        angles = {f: float(self.theta.get(f, 0.0)) for f in self.flights}
        for f, th in zip(self.free, np.asarray(free_theta, dtype=float).tolist()):
            angles[f] = th
        return angles

    def state(self, free_theta):
        """Current event halves, pair distances and resolved flag."""
        angles = self.angles(free_theta)
        approaches = {k: self._approach(k[0], k[1], angles) for k in self.keys}
        pair_distance = {k: a[0] for k, a in approaches.items() if a is not None}
        evs = {}
        for a, b in self.rows:
            k = pair_key(a, b)
            if k in evs or approaches[k] is None:
                continue
            evs[k] = make_event(k[0], k[1], self.level, approaches[k], self.scenario.sector.t_start, self.params.dt)
        events = EventArray.from_events(evs.values())
        wanted = set(self.rows)
        keep = [i for i in range(len(events)) if (int(events.flight[i]), int(events.partner[i])) in wanted]
        events = events.subset(keep)
        resolved = all(d >= self.params.s for d in pair_distance.values())
        return events, pair_distance, resolved

    def __call__(self, free_theta) -> float:
        self.evaluations += 1
        events, pair_distance, _ = self.state(free_theta)
        return tcs(events, pair_distance, self.params)

    def resolved(self, free_theta) -> bool:
        return self.state(free_theta)[2]


def optimize_cluster(objective: ClusterObjective, theta, params: SolverParams) -> tuple[np.ndarray, DescentTrace]:
    """Normalized gradient descent on the cluster's total conflict score."""
    theta = clip_theta(theta, params)
    trace = DescentTrace()
    f = objective(theta)
    eta = params.eta0
    trace.steps.append(DescentStep(theta.copy(), f, eta, True))
    if f <= 0.0:
        trace.stop_reason = "converged"
        return theta, trace
    if objective.resolved(theta):
        trace.stop_reason = "all_resolved"
        return theta, trace

    trials = 0
    grad = None
    while trials < params.gd_max_steps:
        if grad is None:
            grad = numerical_gradient(objective, theta, params, f0=f)
            norm = float(np.linalg.norm(grad))
            if norm == 0.0:
                grad = one_sided_gradient(objective, theta, params, f)
                norm = float(np.linalg.norm(grad))
            if norm == 0.0 or not math.isfinite(norm):
                trace.stop_reason = "converged"
                return theta, trace
            direction = grad / norm
        trial = clip_theta(theta - eta * direction, params)
        f_trial = objective(trial)
        trials += 1
        action, new_eta = descent_step_rules(f - f_trial, eta, params)
        if action is StepAction.BACKTRACK:
            trace.steps.append(DescentStep(trial, f_trial, eta, False))
            eta = new_eta
            if eta < MIN_ETA:
                trace.stop_reason = "converged"
                return theta, trace
            continue
        theta, f = trial, f_trial
        trace.steps.append(DescentStep(theta.copy(), f, eta, True))
        grad = None
        if objective.resolved(theta):
            trace.stop_reason = "all_resolved"
            return theta, trace
        if action is StepAction.TERMINATE:
            trace.stop_reason = "converged"
            return theta, trace
        eta = new_eta
    trace.stop_reason = "step_cap"
    return theta, trace


@dataclass
class PlanarSolution:
    """Angles chosen for a level's flights and the violations that remain."""

    theta: dict[int, float]
    residual: list[MinDistanceEvent]
    traces: list[DescentTrace] = field(default_factory=list)


def _scan(scenario: Scenario, flights: Sequence[int], theta: dict[int, float], level: int, params: SolverParams):
    tracks = {
        f: sample_track(scenario.flights[f], theta[f], scenario.sector, params.dt) for f in flights
    }
    pair_distance: dict[PairKey, float] = {}
    evs = scan_pairs(tracks, flights, level, scenario.sector.t_start, params, pair_distance)
    return evs, pair_distance


def solve_level(
    scenario: Scenario,
    flights: Sequence[int],
    level: int,
    params: SolverParams,
    seed: int | np.random.Generator | None = 0,
) -> PlanarSolution:
    """Resolve one level's conflicts starting from straight paths."""
    flights = [int(f) for f in flights]
    theta = {f: 0.0 for f in flights}
    violating, pair_distance = _scan(scenario, flights, theta, level, params)
    if not violating:
        return PlanarSolution(theta, [])
    events = EventArray.from_events(violating)
    clusters = cluster_level_events(events, pair_distance, params, seed)
    optimized: set[int] = set()
    traces = []
    for cluster in clusters:
        rows = [(int(events.flight[i]), int(events.partner[i])) for i in cluster.members]
        free = [f for f in dict.fromkeys(a for a, _ in rows) if f not in optimized]
        if not free:
            continue
        objective = ClusterObjective(scenario, level, rows, free, theta, params)
        start = np.array([theta[f] for f in free])
        new_theta, trace = optimize_cluster(objective, start, params)
        for f, th in zip(free, new_theta.tolist()):
            theta[f] = th
        optimized.update(free)
        traces.append(trace)
    residual, _ = _scan(scenario, flights, theta, level, params)
    return PlanarSolution(theta, residual, traces)


class RFLegSolver:
    """Planar solver that bends flights onto arcs; plugs into the level engine."""

    name = "rfleg"

    def solve(
        self,
        scenario: Scenario,
        flights: Sequence[int],
        level: int,
        params: SolverParams,
        seed: int | np.random.Generator | None = 0,
    ) -> PlanarSolution:
        return solve_level(scenario, flights, level, params, seed)
