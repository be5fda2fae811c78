"""File formats and reporting metrics.

Scenario file::

    {"sector": {"width", "height", "levels", "t_start", "t_end"},
     "flights": [{"id", "entry": [x, y], "exit": [x, y], "release", "speed"}]}

Solution file::

    {"flights": [{"id", "level", "theta_deg", "path_length", "extension"}],
     "unresolved": [ids],
     "iterations": [{"i", "conflicting_flights", "violating_pairs"}]}

Histograms are two-column CSV files ``bin_start,count``. Distances are in
nautical miles, times in hours, speeds in knots, angles in degrees.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import FlightSpec, Scenario, SolutionReport, Sector, validate_scenario

ANGLE_BIN_DEG = 5.0
EXTENSION_BIN_PCT = 0.25
EXTENSION_MAX_PCT = 3.5


def scenario_to_dict(scenario: Scenario) -> dict:
    s = scenario.sector
    return {
        "sector": {
            "width": s.width,
            "height": s.height,
            "levels": s.level_count,
            "t_start": s.t_start,
            "t_end": s.t_end,
        },
        "flights": [
            {
                "id": f.id,
                "entry": [f.entry[0], f.entry[1]],
                "exit": [f.exit[0], f.exit[1]],
                "release": f.release_time,
                "speed": f.speed,
            }
            for f in scenario.flights
        ],
    }


def scenario_from_dict(data: dict) -> Scenario:
    s = data["sector"]
    sector = Sector(
        width=float(s["width"]),
        height=float(s["height"]),
        level_count=int(s["levels"]),
        time_window=(float(s.get("t_start", 0.0)), float(s.get("t_end", 1.0))),
    )
    flights = [
        FlightSpec(
            id=str(f["id"]),
            entry=tuple(f["entry"]),
            exit=tuple(f["exit"]),
            release_time=float(f["release"]),
            speed=float(f["speed"]),
        )
        for f in data["flights"]
    ]
    return validate_scenario(sector, flights)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_scenario(scenario: Scenario, path) -> None:
    write_atomic(Path(path), dumps(scenario_to_dict(scenario)))


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def solution_to_dict(report: SolutionReport) -> dict:
    return {
        "flights": [
            {
                "id": fid,
                "level": r.level,
                "theta_deg": math.degrees(r.theta),
                "path_length": r.path_length,
                "extension": r.extension_ratio,
            }
            for fid, r in zip(report.flight_ids, report.per_flight)
        ],
        "unresolved": list(report.unresolved_flights),
        "iterations": [
            {"i": m.iteration, "conflicting_flights": m.conflicting_flights, "violating_pairs": m.violating_pairs}
            for m in report.per_iteration
        ],
    }


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def angle_histogram(theta_rad, bound_deg: float = 25.0, width_deg: float = ANGLE_BIN_DEG) -> list[tuple[float, int]]:
    """Counts of arc half-angles in ``width_deg`` buckets over ``[-bound, bound]``.

    Buckets are half-open ``[start, start + width)`` except the last, which is
    closed; a straight flight (0 deg) lands in the bucket starting at 0.
    """
    deg = np.degrees(np.asarray(theta_rad, dtype=float))
    n = max(1, math.ceil(2 * bound_deg / width_deg - 1e-9))
    starts = [-bound_deg + i * width_deg for i in range(n)]
    idx = np.floor((deg + bound_deg) / width_deg + 1e-9).astype(int)
    idx = np.clip(idx, 0, n - 1)
    counts = np.bincount(idx, minlength=n)
    return [(s, int(c)) for s, c in zip(starts, counts)]


def extension_histogram(ratios, width_pct: float = EXTENSION_BIN_PCT, max_pct: float = EXTENSION_MAX_PCT):
    """Counts of extra path length in percent, ``width_pct`` buckets from 0."""
    pct = (np.asarray(ratios, dtype=float) - 1.0) * 100.0
    n = int(round(max_pct / width_pct))
    idx = np.clip(np.floor(pct / width_pct + 1e-9).astype(int), 0, n - 1)
    counts = np.bincount(idx, minlength=n)
    return [(round(i * width_pct, 6), int(c)) for i, c in enumerate(counts)]


def summary(report: SolutionReport) -> dict:
    theta = np.array([r.theta for r in report.per_flight])
    ext = np.array([r.extension_ratio for r in report.per_flight])
    n = len(report.per_flight)
    return {
        "flights": n,
        "iterations": report.iterations_run,
        "converged": report.converged,
        "unresolved_count": len(report.unresolved_flights),
        "initial_conflicting_flights": report.per_iteration[0].conflicting_flights if report.per_iteration else 0,
        "straight_share": float(np.mean(theta == 0.0)) if n else 1.0,
        "mean_extension": float(ext.mean()) if n else 1.0,
        "max_extension": float(ext.max()) if n else 1.0,
        "peak_simultaneous": report.peak_simultaneous,
    }


def write_solution(report: SolutionReport, out_dir, bound_deg: float = 25.0) -> dict:
    """Write solution JSON, per-iteration CSV, both histograms and the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_atomic(out / "solution.json", dumps(solution_to_dict(report)))
    write_atomic(
        out / "iterations.csv",
        csv_text(
            ["i", "conflicting_flights", "violating_pairs"],
            [(m.iteration, m.conflicting_flights, m.violating_pairs) for m in report.per_iteration],
        ),
    )
    theta = [r.theta for r in report.per_flight]
    ext = [r.extension_ratio for r in report.per_flight]
    write_atomic(out / "angle_histogram.csv", csv_text(["bin_start", "count"], angle_histogram(theta, bound_deg)))
    write_atomic(out / "extension_histogram.csv", csv_text(["bin_start", "count"], extension_histogram(ext)))
    summ = summary(report)
    write_atomic(out / "summary.json", dumps(summ))
    return summ


def conflict_curves(per_instance: Sequence[Sequence[int]], N: int) -> tuple[list[int], list[float]]:
    """Unresolved-instance count and mean conflicting flights for iterations 0..N.

    Each input row is an instance's conflicting-flight count per executed
    iteration; a finished run keeps its last value afterwards.
    """
    unresolved, mean_conf = [], []
    for h in range(N + 1):
        vals = [row[min(h, len(row) - 1)] if row else 0 for row in per_instance]
        unresolved.append(sum(1 for v in vals if v > 0))
        mean_conf.append(float(np.mean(vals)) if vals else 0.0)
    return unresolved, mean_conf
