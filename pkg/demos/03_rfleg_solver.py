"""Bend three flights that meet at one point on a single level.

Angles are capped at 25 degrees, so one pass can leave a pair too close; the
level engine then moves a top contributor to another level.
"""

import math

import numpy as np

from crp3d import Assignment, FlightSpec, RFLegSolver, Sector, SolverParams, validate_scenario
from crp3d.conflict import detect_conflicts

params = SolverParams()
sector = Sector(60.0, 60.0, 1, (0.0, 1.0))

# three flights meet at the sector centre at t = 6 min
flights = []
for i, deg in enumerate((0, 60, 120)):
    a = math.radians(deg)
    dx, dy = math.cos(a), math.sin(a)
    r = 30 / max(abs(dx), abs(dy))
    flights.append(FlightSpec(f"X{i}", (30 - r * dx, 30 - r * dy), (30 + r * dx, 30 + r * dy), 0.1 - r / 533, 533.0))
scenario = validate_scenario(sector, flights)

before = detect_conflicts(scenario, Assignment.straight(3), params)
print("before:", {k: round(v, 2) for k, v in before.pair_distance.items()})

sol = RFLegSolver().solve(scenario, [0, 1, 2], 0, params, seed=0)
for tr in sol.traces:
    tcs = tr.accepted_tcs
    print(f"cluster descent: {tr.trials} trial steps, tcs {tcs[0]:.2f} -> {tcs[-1]:.2f}, stop: {tr.stop_reason}")

theta = np.array([sol.theta[f] for f in range(3)])
print("angles (deg):", np.round(np.degrees(theta), 2))
after = detect_conflicts(scenario, Assignment(np.zeros(3, dtype=int), theta), params)
print("after:", {k: round(v, 2) for k, v in after.pair_distance.items()}, "residual pairs", len(sol.residual))
