import math

import numpy as np
import pytest

from crp3d import engine
from crp3d.clustering import EventCluster
from crp3d.conflict import detect_conflicts
from crp3d.engine import (
    IterationState,
    disperse,
    initialize_levels,
    round_robin_levels,
    run_iteration,
    select_dispersal,
    solve,
)
from crp3d.model import Assignment, FlightSpec, Sector, SolverParams, validate_scenario
from crp3d.rfleg import PlanarSolution, RFLegSolver
from crp3d.scengen import GenConfig, generate

P = SolverParams()


def scenario(flights, levels=3):
    sector = Sector(60.0, 60.0, levels, (0.0, 1.0))
    return validate_scenario(sector, [FlightSpec(f"F{i}", *f) for i, f in enumerate(flights)])


def star(n, levels=3, t=0.1):
    flights = []
    for i in range(n):
        a = math.pi * i / n
        dx, dy = math.cos(a), math.sin(a)
        r = 30 / max(abs(dx), abs(dy))
        flights.append(((30 - r * dx, 30 - r * dy), (30 + r * dx, 30 + r * dy), t - r / 533, 533.0))
    return scenario(flights, levels)


QUIET = [((0, 10), (60, 10), 0.0, 533.0), ((0, 50), (60, 50), 0.0, 533.0)]


# --- initialization -------------------------------------------------------------


def test_round_robin_example():
    a, b, c, d, e, f = range(6)
    levels = round_robin_levels([[a, b, c, d], [e, f]], 6, 3)
    assert levels.tolist() == [0, 1, 2, 0, 1, 2]


def test_round_robin_pair_and_bystanders():
    levels = round_robin_levels([[3, 1]], 5, 12)
    assert levels.tolist() == [0, 1, 0, 0, 0]


def test_initialize_conflict_free():
    sc = scenario(QUIET)
    a = initialize_levels(sc, P)
    assert a.level.tolist() == [0, 0]
    assert a.theta.tolist() == [0.0, 0.0]


def test_initialize_spreads_crossing_pair():
    sc = star(2, levels=12)
    a = initialize_levels(sc, P)
    assert sorted(a.level.tolist()) == [0, 1]


# --- dispersal ------------------------------------------------------------------


def test_select_dispersal_two_clusters():
    # cluster flights already sorted by score: {a:9, b:4}, {c:7, d:1}
    assert select_dispersal([["a", "b"], ["c", "d"]], r=1, R=2) == ["a", "c"]


def test_select_dispersal_second_sweep():
    assert select_dispersal([["a", "b"], ["c", "d"]], r=1, R=3) == ["a", "c", "b"]


def test_select_dispersal_exhausts():
    assert select_dispersal([["a"], []], r=2, R=5) == ["a"]


def fake_clusters(level, flights):
    return {level: [EventCluster([0], [1.0], np.zeros(3), list(flights))]}


def test_disperse_single_level_is_noop():
    sc = star(3, levels=1)
    a = Assignment.straight(3)
    post = detect_conflicts(sc, a, P)
    out, moved = disperse(sc, a, fake_clusters(0, [0, 1, 2]), post, P, np.random.default_rng(0))
    assert moved == []
    assert out.level.tolist() == [0, 0, 0]


def test_disperse_moves_to_other_levels_and_resets_theta():
    sc = star(4, levels=5)
    a = Assignment(np.full(4, 2), np.full(4, 0.1))
    post = detect_conflicts(sc, a, P)
    out, moved = disperse(sc, a, fake_clusters(2, [0, 1, 2, 3]), post, P.with_overrides(r=1, R=3), np.random.default_rng(1))
    assert len(moved) == 3  # one cluster, r = 1 per sweep, sweeps repeat until R
    for f in moved:
        assert out.level[f] != 2 and 0 <= out.level[f] < 5
        assert out.theta[f] == 0.0
    untouched = [f for f in range(4) if f not in moved]
    assert all(out.level[f] == 2 and out.theta[f] == 0.1 for f in untouched)


def test_disperse_skips_conflict_free_levels():
    sc = scenario(QUIET)
    a = Assignment.straight(2)
    post = detect_conflicts(sc, a, P)
    out, moved = disperse(sc, a, fake_clusters(0, [0, 1]), post, P, np.random.default_rng(0))
    assert moved == [] and out.level.tolist() == [0, 0]


# --- iteration / solve -----------------------------------------------------------------


class NullSolver:
    def solve(self, scenario, flights, level, params, seed=0):
        return PlanarSolution({f: 0.0 for f in flights}, [])


class BrokenSolver:
    def solve(self, scenario, flights, level, params, seed=0):
        raise RuntimeError("boom")


def test_run_iteration_conflict_free():
    sc = scenario(QUIET)
    a = Assignment.straight(2)
    st = run_iteration(sc, IterationState(0, a), RFLegSolver(), P)
    assert st.converged
    assert st.iteration == 1
    assert np.array_equal(st.assignment.level, a.level)


def test_run_iteration_solver_resolves():
    sc = star(2, levels=2)
    st = run_iteration(sc, IterationState(0, Assignment.straight(2)), RFLegSolver(), P)
    assert st.converged
    assert not detect_conflicts(sc, st.assignment, P).any()


def test_run_iteration_disperses_unsolvable_level():
    sc = star(6, levels=4)
    st = run_iteration(sc, IterationState(0, Assignment.straight(6)), NullSolver(), P)
    assert not st.converged
    assert 1 <= len(st.moved) <= P.R
    assert all(st.assignment.level[f] != 0 for f in st.moved)
    assert st.post_solve.violating_pairs == 15


def test_solver_failure_keeps_previous_trajectories():
    sc = star(3, levels=3)
    a = Assignment(np.zeros(3, dtype=int), np.array([0.1, -0.1, 0.0]))
    st = run_iteration(sc, IterationState(0, a), BrokenSolver(), P, disperse_after=False)
    assert st.assignment.theta.tolist() == [0.1, -0.1, 0.0]


def test_solve_conflict_free():
    rep = solve(scenario(QUIET))
    assert rep.iterations_run == 0
    assert rep.unresolved_flights == []
    assert rep.converged
    assert len(rep.per_iteration) == 1


def test_solve_with_zero_iterations():
    sc = star(6, levels=3)
    rep = solve(sc, P.with_overrides(N=0))
    assert rep.iterations_run == 0
    assert len(rep.per_iteration) == 1
    expected = detect_conflicts(sc, initialize_levels(sc, P, P.rng_seed), P)
    assert rep.per_iteration[0].violating_pairs == expected.violating_pairs
    assert len(rep.unresolved_flights) == len(expected.flights)


def small_scenario(seed):
    return generate(GenConfig(flights=60, level_count=4, seed=seed))


@pytest.mark.parametrize("seed", [0, 1])
def test_solve_invariants(seed):
    sc = small_scenario(seed)
    rep = solve(sc, seed=seed)
    lv = rep.final_assignment.level
    assert len(lv) == len(sc) == len(rep.per_flight)
    assert lv.min() >= 0 and lv.max() < sc.sector.level_count
    assert np.all(np.abs(rep.final_assignment.theta) <= P.theta_high)
    assert len(rep.per_iteration) == rep.iterations_run + 1
    final = detect_conflicts(sc, rep.final_assignment, P)
    assert rep.converged == (not final.any())
    assert rep.unresolved_flights == [sc.flights[i].id for i in final.flights]
    if rep.converged:
        assert rep.per_iteration[-1].violating_pairs == 0


def test_solve_is_deterministic():
    sc = small_scenario(3)
    a, b = solve(sc, seed=5), solve(sc, seed=5)
    assert np.array_equal(a.final_assignment.level, b.final_assignment.level)
    assert np.array_equal(a.final_assignment.theta, b.final_assignment.theta)
    assert a.per_iteration == b.per_iteration


def test_dispersal_bound_per_level(monkeypatch):
    seen = []
    real = engine.disperse

    def spy(scenario, assignment, clusters, post, params, rng):
        out, moved = real(scenario, assignment, clusters, post, params, rng)
        for level in clusters:
            left = [f for f in moved if assignment.level[f] == level]
            seen.append(len(left))
        assert len(out.level) == len(assignment.level)
        return out, moved

    monkeypatch.setattr(engine, "disperse", spy)
    solve(star(8, levels=3), P.with_overrides(N=4))
    assert seen and max(seen) <= P.R
