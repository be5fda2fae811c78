"""Cluster & disperse on one full-size instance: 320 flights, 12 levels."""

import numpy as np

from crp3d import GenConfig, SolverParams, generate, solve
from crp3d.report import angle_histogram, summary

scenario = generate(GenConfig(seed=4))
rep = solve(scenario, SolverParams(), seed=4)

for m in rep.per_iteration:
    print(f"iteration {m.iteration:2d}: {m.conflicting_flights:3d} conflicting flights, {m.violating_pairs:3d} pairs")

s = summary(rep)
print(f"converged {s['converged']} after {s['iterations']} iterations")
print(f"straight share {s['straight_share']:.3f}, mean extension {s['mean_extension']:.5f}, max {s['max_extension']:.5f}")

levels = np.bincount(rep.final_assignment.level, minlength=12)
print("flights per level", levels.tolist())
print("angle histogram (deg bin, count)")
for start, count in angle_histogram(rep.final_assignment.theta):
    print(f"  {start:5.0f} {'#' * (count // 4)} {count}")
