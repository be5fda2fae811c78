"""Flight-level assignment loop: cluster conflicts, solve each level, disperse.

Each iteration clusters every level's current violating events, re-solves the
levels that have conflicts with a planar solver, and then moves up to ``R``
top contributors of each still-conflicted level to other levels at random.
All randomness is drawn from generators derived from ``(seed, iteration,
level)`` so a run is reproducible bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .clustering import EventCluster, cluster_level_events
from .conflict import ConflictReport, detect_conflicts, flight_scores
from .geometry import flight_path_length, peak_simultaneous
from .model import (
    Assignment,
    FlightResult,
    IterationMetrics,
    Scenario,
    SolutionReport,
    SolverParams,
)
from .rfleg import PlanarSolution, RFLegSolver

log = logging.getLogger(__name__)

_INIT, _CLUSTER, _SOLVE, _DISPERSE = 0, 1, 2, 3


class PlanarSolver(Protocol):
    """Anything that can resolve conflicts among flights sharing one level.

    It must return a best-effort partial solution when it cannot remove every
    conflict.
    """

    def solve(
        self,
        scenario: Scenario,
        flights: Sequence[int],
        level: int,
        params: SolverParams,
        seed: np.random.Generator,
    ) -> PlanarSolution: ...


def derived_rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *(int(t) for t in tags)])


@dataclass
class IterationState:
    iteration: int
    assignment: Assignment
    clusters: dict[int, list[EventCluster]] = field(default_factory=dict)
    conflicts: ConflictReport | None = None
    converged: bool = False
    moved: list[int] = field(default_factory=list)
    # conflicts right after the planar solves, before any flight was moved
    post_solve: ConflictReport | None = None

    def level_sets(self, level_count: int) -> dict[int, list[int]]:
        return {e: self.assignment.flights_on(e).tolist() for e in range(level_count)}


def round_robin_levels(cluster_flights: Sequence[Sequence[int]], n_flights: int, level_count: int) -> np.ndarray:
    """Deal the flights of consecutive clusters across the levels in turn.

    Flights in no cluster stay on level 0.
    """
    levels = np.zeros(n_flights, dtype=int)
    offset = 0
    for flights in cluster_flights:
        for j, f in enumerate(flights):
            levels[f] = (j + offset) % level_count
        offset += len(flights)
    return levels


def initialize_levels(scenario: Scenario, params: SolverParams, seed: int = 0) -> Assignment:
    """Straight paths on level 0, then round-robin the clustered conflicting flights."""
    n = len(scenario)
    assignment = Assignment.straight(n)
    report = detect_conflicts(scenario, assignment, params, levels=[0])
    events = report.level_events(0)
    if len(events) == 0:
        return assignment
    clusters = cluster_level_events(events, report.pair_distance, params, derived_rng(seed, 0, 0, _INIT))
    assignment.level = round_robin_levels(
        [c.flights for c in clusters], n, scenario.sector.level_count
    )
    return assignment


def select_dispersal(candidates: Sequence[Sequence[int]], r: int, R: int) -> list[int]:
    """Pick up to ``R`` flights, at most ``r`` per cluster per sweep.

    ``candidates`` holds each cluster's flights sorted by score, highest first,
    with clusters in their processing order.
    """
    pointers = [0] * len(candidates)
    chosen: list[int] = []
    taken: set[int] = set()
    while len(chosen) < R:
        progress = False
        for ci, flights in enumerate(candidates):
            quota = r
            while quota > 0 and pointers[ci] < len(flights) and len(chosen) < R:
                f = flights[pointers[ci]]
                pointers[ci] += 1
                if f in taken:
                    continue
                taken.add(f)
                chosen.append(f)
                quota -= 1
                progress = True
            if len(chosen) >= R:
                break
        if not progress:
            break
    return chosen


def disperse(
    scenario: Scenario,
    assignment: Assignment,
    clusters: dict[int, list[EventCluster]],
    post: ConflictReport,
    params: SolverParams,
    rng: np.random.Generator,
) -> tuple[Assignment, list[int]]:
    """Move each conflicted level's top contributors to random other levels."""
    L = scenario.sector.level_count
    out = assignment.copy()
    moved: list[int] = []
    if L == 1:
        return out, moved
    for level in sorted(clusters):
        events = post.level_events(level)
        if len(events) == 0:
            continue
        scores = flight_scores(events, post.pair_distance, params)
        candidates = []
        for cluster in clusters[level]:
            flights = [f for f in cluster.flights if f in scores]
            flights.sort(key=lambda f: -scores[f])
            candidates.append(flights)
        for f in select_dispersal(candidates, params.r, params.R):
            target = int(rng.integers(L - 1))
            if target >= level:
                target += 1
            out.level[f] = target
            out.theta[f] = 0.0
            moved.append(f)
    return out, moved


def run_iteration(
    scenario: Scenario,
    state: IterationState,
    solver: PlanarSolver,
    params: SolverParams,
    seed: int = 0,
    disperse_after: bool = True,
) -> IterationState:
    """One cluster / solve / disperse round; returns the next state."""
    h = state.iteration + 1
    assignment = state.assignment.copy()
    current = state.conflicts
    if current is None:
        current = detect_conflicts(scenario, assignment, params)
    if not current.any():
        return IterationState(h, assignment, {}, current, converged=True)

    clusters: dict[int, list[EventCluster]] = {}
    for level in sorted(current.events):
        events = current.level_events(level)
        clusters[level] = cluster_level_events(
            events, current.pair_distance, params, derived_rng(seed, h, level, _CLUSTER)
        )
        flights = assignment.flights_on(level).tolist()
        try:
            sol = solver.solve(scenario, flights, level, params, derived_rng(seed, h, level, _SOLVE))
        except Exception:  # noqa: BLE001 - keep the level's previous trajectories
            log.exception("planar solver failed on level %d; keeping previous trajectories", level)
            continue
        for f, th in sol.theta.items():
            assignment.theta[f] = min(max(th, params.theta_low), params.theta_high)

    post = detect_conflicts(scenario, assignment, params)
    if not post.any():
        return IterationState(h, assignment, clusters, post, converged=True, post_solve=post)
    if not disperse_after:
        return IterationState(h, assignment, clusters, post, post_solve=post)
    dispersed, moved = disperse(scenario, assignment, clusters, post, params, derived_rng(seed, h, 0, _DISPERSE))
    return IterationState(h, dispersed, clusters, None, moved=moved, post_solve=post)


def _metrics(i: int, report: ConflictReport) -> IterationMetrics:
    return IterationMetrics(i, len(report.flights), report.violating_pairs)


def solve(
    scenario: Scenario,
    params: SolverParams | None = None,
    solver: PlanarSolver | None = None,
    seed: int | None = None,
) -> SolutionReport:
    """Assign a flight level and arc angle to every flight of the scenario."""
    params = params or SolverParams()
    solver = solver or RFLegSolver()
    seed = params.rng_seed if seed is None else seed

    assignment = initialize_levels(scenario, params, seed)
    report = detect_conflicts(scenario, assignment, params)
    per_iteration = [_metrics(0, report)]
    state = IterationState(0, assignment, conflicts=report, converged=not report.any())

    while not state.converged and state.iteration < params.N:
        last = state.iteration + 1 == params.N
        state = run_iteration(scenario, state, solver, params, seed, disperse_after=not last)
        per_iteration.append(_metrics(state.iteration, state.post_solve or state.conflicts))
        log.info(
            "iteration %d: %d conflicting flights, %d violating pairs",
            state.iteration,
            per_iteration[-1].conflicting_flights,
            per_iteration[-1].violating_pairs,
        )

    final = state.assignment
    final_report = detect_conflicts(scenario, final, params)
    ids = [f.id for f in scenario.flights]
    per_flight = []
    for i, f in enumerate(scenario.flights):
        th = float(final.theta[i])
        length = flight_path_length(f, th)
        per_flight.append(FlightResult(int(final.level[i]), th, length, length / f.chord))
    return SolutionReport(
        final_assignment=final,
        per_iteration=per_iteration,
        unresolved_flights=[ids[i] for i in final_report.flights],
        per_flight=per_flight,
        peak_simultaneous=peak_simultaneous(scenario, final.theta, params.dt),
        iterations_run=state.iteration,
        converged=not final_report.any(),
        flight_ids=ids,
    )
