"""Bending a flight onto a circular arc between its entry and exit fixes."""

import math

import numpy as np

from crp3d import FlightSpec
from crp3d.geometry import arc_position, arc_spec, exit_time, path_length

# an eastbound flight across a 54 nmi sector at 533 kn
f = FlightSpec("demo", (0.0, 30.0), (54.0, 30.0), 0.0, 533.0)

# theta is the signed half arc angle; positive bulges to the left of travel
for deg in (0, 5, 10, 25, -25):
    th = math.radians(deg)
    L = path_length(f.entry, f.exit, th)
    print(f"theta {deg:4d} deg  path {L:7.3f} nmi  extension {L / f.chord:.5f}  exit at {exit_time(f, th) * 60:6.3f} min")

# the arc circle for 25 degrees
arc = arc_spec(f.entry, f.exit, math.radians(25))
print("centre", np.round(arc.center, 3), "radius", round(arc.radius, 3))

# positions every minute along the bent path, constant ground speed
th = math.radians(25)
ts = np.arange(0.0, exit_time(f, th), 1 / 60)
xy = arc_position(f, th, ts)
steps = np.hypot(*np.diff(xy, axis=0).T)
print("max sideways offset", round(xy[:, 1].max() - 30.0, 3), "nmi")
print("distance flown per minute (chords, slightly under 533/60):", np.round(steps, 4)[:3], "...")
