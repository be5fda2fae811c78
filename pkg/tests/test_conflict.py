import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crp3d.conflict import (
    EventArray,
    ccs_event,
    ccs_pair,
    ccs_scores,
    detect_conflicts,
    flight_score,
    flight_scores,
    min_distance_event,
    ptd,
    tcs,
)
from crp3d.model import Assignment, FlightSpec, MinDistanceEvent, PosTime, Sector, SolverParams, validate_scenario

import oracles

P = SolverParams()
SECTOR = Sector(60.0, 60.0, 3, (0.0, 1.0))


def scenario(*flights):
    return validate_scenario(SECTOR, [FlightSpec(f"F{i}", *f) for i, f in enumerate(flights)])


def crossing():
    # eastbound and northbound through (30, 30), both there at t = 30/533 h
    return scenario(((0, 30), (60, 30), 0.0, 533.0), ((30, 0), (30, 60), 0.0, 533.0))


def event(d, a=0, b=1, t=0.1, level=0):
    return MinDistanceEvent(a, b, d, t, PosTime(0.0, 0.0, level, t), PosTime(d, 0.0, level, t))


# --- min_distance_event ------------------------------------------------------


def test_crossing_pair_meets():
    sc = crossing()
    e = min_distance_event(sc, Assignment.straight(2), 0, 1, P)
    assert e.distance < 533 * P.dt
    assert abs(e.time - 30 / 533) <= P.dt
    assert e.event_a.t == e.event_b.t == e.time
    assert e.event_a.level == e.event_b.level == 0


def test_parallel_constant_gap_ties_to_earliest():
    sc = scenario(((0, 10), (60, 10), 0.1, 533.0), ((0, 16), (60, 16), 0.1, 533.0))
    e = min_distance_event(sc, Assignment.straight(2), 0, 1, P)
    assert e.distance == pytest.approx(6.0, abs=1e-9)
    first = math.ceil(0.1 / P.dt - 1e-9) * P.dt
    assert e.time == pytest.approx(first, abs=1e-12)
    assert oracles.brute_min_distance(sc, [0.0, 0.0], 0, 1, P.dt) == pytest.approx((6.0, first), abs=1e-9)


def test_disjoint_intervals():
    sc = scenario(((0, 10), (60, 10), 0.0, 533.0), ((0, 16), (60, 16), 0.5, 533.0))
    assert min_distance_event(sc, Assignment.straight(2), 0, 1, P) is None


def test_different_levels_is_caller_error():
    a = Assignment.straight(2)
    a.level[1] = 1
    with pytest.raises(ValueError):
        min_distance_event(crossing(), a, 0, 1, P)


def test_event_distance_matches_positions():
    sc = scenario(((0, 20), (60, 50), 0.0, 533.0), ((10, 0), (40, 60), 0.01, 500.0))
    a = Assignment(np.zeros(2, dtype=int), np.array([0.2, -0.3]))
    e = min_distance_event(sc, a, 0, 1, P)
    d = math.hypot(e.event_a.x - e.event_b.x, e.event_a.y - e.event_b.y)
    assert d == pytest.approx(e.distance, abs=1e-12)
    ref = oracles.brute_min_distance(sc, [0.2, -0.3], 0, 1, P.dt)
    assert (e.distance, e.time) == pytest.approx(ref, abs=1e-9)


# --- ptd -----------------------------------------------------------------------


def test_ptd_planar():
    assert ptd(PosTime(0, 0, 0, 0), PosTime(3, 4, 0, 0), 533) == 5.0


def test_ptd_across_levels_is_infinite():
    assert ptd(PosTime(0, 0, 0, 0), PosTime(0, 0, 1, 0), 533) == math.inf


def test_ptd_time_scaled():
    assert ptd(PosTime(0, 0, 0, 0), PosTime(0, 0, 0, 0.01), 533) == pytest.approx(5.33)


pts = st.builds(PosTime, st.floats(-100, 100), st.floats(-100, 100), st.just(0), st.floats(0, 1))


@given(pts, pts, pts)
def test_ptd_is_a_metric(p, q, r):
    assert ptd(p, q, 533) == pytest.approx(ptd(q, p, 533))
    assert ptd(p, p, 533) == 0
    assert ptd(p, r, 533) <= ptd(p, q, 533) + ptd(q, r, 533) + 1e-9


# --- ccs -----------------------------------------------------------------------


def test_ccs_pair_gate_closed():
    p, q = PosTime(0, 0, 0, 0), PosTime(1, 0, 0, 0)
    assert ccs_pair(p, q, 0, 1, 5.7, P) == 0.0


def test_ccs_pair_coincident():
    p = PosTime(0, 0, 0, 0)
    assert ccs_pair(p, p, 0, 1, 0.0, P) == pytest.approx(5.625)


def test_ccs_pair_clamped():
    p, q = PosTime(0, 0, 0, 0), PosTime(10, 0, 0, 0)
    assert ccs_pair(p, q, 0, 1, 1.0, P) == 0.0


def test_ccs_pair_same_flight():
    p = PosTime(0, 0, 0, 0)
    assert ccs_pair(p, p, 3, 3, 0.0, P) == 0.0


@given(pts, pts, st.floats(0, 10))
def test_ccs_pair_symmetric(p, q, d):
    assert ccs_pair(p, q, 0, 1, d, P) == ccs_pair(q, p, 1, 0, d, P)


def test_ccs_event_singleton():
    ev = EventArray.from_events([event(3.125)]).subset([0])
    assert ccs_event(0, ev, {(0, 1): 3.125}, P) == 0.0


def test_ccs_event_single_term():
    ev = EventArray.from_events([event(3.125)])
    assert ccs_event(0, ev, {(0, 1): 3.125}, P) == pytest.approx(2.5)


def test_ccs_event_three_near_events_brute_force():
    rng = np.random.default_rng(3)
    evs = []
    for a, b in [(0, 1), (1, 2), (0, 2)]:
        x, y, t = rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0.1, 0.102)
        d = rng.uniform(0.5, 3)
        evs.append(MinDistanceEvent(a, b, d, t, PosTime(x, y, 0, t), PosTime(x + d, y, 0, t)))
    arr = EventArray.from_events(evs)
    owner_dist = {(0, 1): 1.0, (1, 2): 2.0, (0, 2): 6.0}
    rows = [(arr.x[i], arr.y[i], arr.level[i], arr.t[i], arr.flight[i]) for i in range(len(arr))]
    expected = oracles.brute_ccs(rows, owner_dist, P.s_prime, P.V0)
    assert ccs_scores(arr, owner_dist, P) == pytest.approx(expected, abs=1e-12)
    assert tcs(arr, owner_dist, P) == pytest.approx(sum(expected), abs=1e-12)


def test_tcs_all_separated():
    ev = EventArray.from_events([event(6.0)])
    assert tcs(ev, {(0, 1): 6.0}, P) == 0.0


def test_tcs_counts_both_directions():
    ev = EventArray.from_events([event(3.125)])
    assert tcs(ev, {(0, 1): 3.125}, P) == pytest.approx(5.0)


def test_tcs_sweep_reaches_zero():
    from crp3d.rfleg import ClusterObjective

    # shallow crossing near the exit end of flight 0; bending it delays and shifts it
    sc = scenario(((0, 10), (60, 40), 0.0, 533.0), ((0, 30), (60, 20), 0.0, 533.0))
    rows = [(0, 1), (1, 0)]
    obj = ClusterObjective(sc, 0, rows, [0], {0: 0.0, 1: 0.0}, P)
    values = []
    for deg in range(0, 26):
        th = math.radians(deg)
        val = obj([th])
        ref = oracles.brute_min_distance(sc, [th, 0.0], 0, 1, P.dt)
        ev = MinDistanceEvent(0, 1, ref[0], ref[1], PosTime(0, 0, 0, ref[1]), PosTime(ref[0], 0, 0, ref[1]))
        brute = 2 * max(0.0, P.s_prime - ref[0]) if ref[0] <= P.s_prime else 0.0
        assert val == pytest.approx(brute, abs=1e-9), deg
        assert tcs(EventArray.from_events([ev]), {(0, 1): ref[0]}, P) == pytest.approx(brute, abs=1e-9)
        values.append(val)
    assert values[0] > 0
    zero_at = next(i for i, v in enumerate(values) if v == 0)
    assert all(v == 0 for v in values[zero_at:])
    assert all(a >= b - 1e-9 for a, b in zip(values[:zero_at], values[1 : zero_at + 1]))


# --- detect_conflicts ------------------------------------------------------------


def test_single_flight_no_conflicts():
    sc = scenario(((0, 30), (60, 30), 0.0, 533.0))
    assert not detect_conflicts(sc, Assignment.straight(1), P).any()


def test_crossing_pair_conflicts():
    rep = detect_conflicts(crossing(), Assignment.straight(2), P)
    assert rep.violating_pairs == 1
    assert rep.flights == [0, 1]
    assert oracles.brute_conflicts(crossing(), [0, 0], [0, 0], P.s, P.dt).keys() == {(0, 1)}


def test_level_gate():
    a = Assignment.straight(2)
    a.level[1] = 2
    assert not detect_conflicts(crossing(), a, P).any()


def test_assignment_must_cover_scenario():
    with pytest.raises(ValueError):
        detect_conflicts(crossing(), Assignment.straight(3), P)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.02, 0.02), st.floats(0, math.radians(25)))
def test_halving_dt_keeps_violations(offset, th):
    sc = scenario(((0, 30), (60, 30), 0.05 + max(offset, 0), 533.0), ((30, 0), (30, 60), 0.05 - min(offset, 0), 533.0))
    a = Assignment(np.zeros(2, dtype=int), np.array([th, 0.0]))
    coarse = detect_conflicts(sc, a, P)
    fine = detect_conflicts(sc, a, P.with_overrides(dt=P.dt / 2))
    for e in coarse.events.get(0, []):
        assert fine.pair_distance[(0, 1)] <= e.distance
        assert fine.violating_pairs == 1


# --- flight_score ----------------------------------------------------------------


def test_flight_score_is_max_over_events():
    # flight 0 has events with 1 (gap 3.625 -> 2.0) and with 2 (gap 2.125 -> 3.5), far apart
    e1 = MinDistanceEvent(0, 1, 3.625, 0.1, PosTime(0, 0, 0, 0.1), PosTime(3.625, 0, 0, 0.1))
    e2 = MinDistanceEvent(0, 2, 2.125, 0.5, PosTime(50, 0, 0, 0.5), PosTime(52.125, 0, 0, 0.5))
    arr = EventArray.from_events([e1, e2])
    pd = {(0, 1): 3.625, (0, 2): 2.125}
    assert flight_score(0, arr, pd, P) == pytest.approx(3.5)


def test_flight_score_zero():
    arr = EventArray.from_events([event(5.5)])
    assert flight_score(0, arr, {(0, 1): 5.7}, P) == 0.0


def test_flight_score_missing_flight():
    arr = EventArray.from_events([event(1.0)])
    with pytest.raises(ValueError):
        flight_score(7, arr, {(0, 1): 1.0}, P)


def test_flight_scores_three_flights_brute_force():
    sc = scenario(
        ((0, 30), (60, 30), 0.0, 533.0),
        ((30, 0), (30, 60), 0.0, 533.0),
        ((0, 0), (60, 60), 0.0, 533.0 * math.sqrt(2)),
    )
    a = Assignment.straight(3)
    rep = detect_conflicts(sc, a, P)
    arr = rep.level_events(0)
    got = flight_scores(arr, rep.pair_distance, P)
    rows = [(arr.x[i], arr.y[i], arr.level[i], arr.t[i], arr.flight[i]) for i in range(len(arr))]
    brute = oracles.brute_ccs(rows, rep.pair_distance, P.s_prime, P.V0)
    for f in range(3):
        assert got[f] == pytest.approx(max(s for s, r in zip(brute, rows) if r[4] == f))
