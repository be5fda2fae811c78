"""Command line: ``crp3d generate | solve | batch | report``.

Exit status is 0 when every conflict is resolved, 2 when some flights remain
in conflict, 1 on error. Set ``CD_LOG`` (e.g. ``INFO``) for progress logs.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import engine
from .model import ScenarioError, SolverParams
from .report import (
    conflict_curves,
    csv_text,
    dumps,
    load_scenario,
    save_scenario,
    write_atomic,
    write_solution,
)
from .scengen import GenConfig, capacity, generate, straight_peak

log = logging.getLogger("crp3d")

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


def _add_generator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--flights", type=int, default=320)
    p.add_argument("--levels", type=int, default=12)
    p.add_argument("--width", type=float, default=54.0, help="sector width, nmi")
    p.add_argument("--height", type=float, default=64.8, help="sector height, nmi")
    p.add_argument("--spacing", type=float, default=5.4, help="boundary fix spacing, nmi")
    p.add_argument("--horizon", type=float, default=1.0, help="release horizon, hours")
    p.add_argument("--slot", type=float, default=0.02, help="release slot, hours")
    p.add_argument("--speed", type=float, default=533.0, help="ground speed, knots")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iterations", type=int, help="max outer iterations (N)")
    p.add_argument("--dt-seconds", type=float, help="sampling step in seconds")
    p.add_argument("--separation", type=float, help="separation distance s, nmi")
    p.add_argument("--margin", type=float, help="score margin s0, nmi")
    p.add_argument("--theta-bound-deg", type=float, help="symmetric arc half-angle bound, degrees")
    p.add_argument("--r", type=int, help="per-cluster dispersal quota")
    p.add_argument("--big-r", type=int, help="max flights moved off a level per iteration")
    p.add_argument("--params", type=Path, help="JSON file of parameter overrides (field names, radians)")


def build_params(args: argparse.Namespace) -> SolverParams:
    overrides: dict = {}
    if getattr(args, "params", None):
        with open(args.params) as fh:
            overrides.update(json.load(fh))
    flag_map = {
        "iterations": ("N", int),
        "separation": ("s", float),
        "margin": ("s0", float),
        "r": ("r", int),
        "big_r": ("R", int),
    }
    for flag, (name, cast) in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            overrides[name] = cast(v)
    if getattr(args, "dt_seconds", None) is not None:
        overrides["dt"] = args.dt_seconds / 3600.0
    if getattr(args, "theta_bound_deg", None) is not None:
        b = math.radians(args.theta_bound_deg)
        overrides["theta_low"], overrides["theta_high"] = -b, b
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    return SolverParams().with_overrides(**overrides)


def _gen_config(args: argparse.Namespace, seed: int) -> GenConfig:
    return GenConfig(
        width=args.width,
        height=args.height,
        spacing=args.spacing,
        flights=args.flights,
        horizon=args.horizon,
        slot=args.slot,
        speed=args.speed,
        level_count=args.levels,
        seed=seed,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    config = _gen_config(args, args.seed)
    scenario = generate(config)
    out = Path(args.out) / "scenario.json"
    save_scenario(scenario, out)
    peak = straight_peak(scenario, SolverParams().dt)
    cap = capacity(config) if config.flights else 0
    print(f"wrote {out}: {len(scenario)} flights, release capacity {cap}, straight-path peak {peak}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    params = build_params(args)
    scenario = load_scenario(args.scenario)
    t0 = time.perf_counter()
    report = engine.solve(scenario, params)
    wall = time.perf_counter() - t0
    summ = write_solution(report, args.out, math.degrees(params.theta_high))
    print(
        f"iterations {summ['iterations']}, unresolved {summ['unresolved_count']}, "
        f"straight {summ['straight_share']:.3f}, mean extension {summ['mean_extension']:.5f}, "
        f"wall {wall:.1f}s"
    )
    return EXIT_OK if report.converged else EXIT_PARTIAL


def _run_instance(job):
    gen_args, params, seed, out_dir = job
    config = GenConfig(**{**gen_args, "seed": seed})
    scenario = generate(config)
    inst_dir = Path(out_dir) / "instances" / f"seed_{seed}"
    save_scenario(scenario, inst_dir / "scenario.json")
    report = engine.solve(scenario, params, seed=seed)
    summ = write_solution(report, inst_dir, math.degrees(params.theta_high))
    summ["straight_peak"] = straight_peak(scenario, params.dt)
    curve = [m.conflicting_flights for m in report.per_iteration]
    return summ, curve


def run_batch(gen_args: dict, params: SolverParams, seeds, out_dir, jobs: int = 1):
    """Generate and solve one instance per seed; returns rows in seed order."""
    work = [(gen_args, params, s, str(out_dir)) for s in seeds]
    results = []
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futures = [ex.submit(_run_instance, w) for w in work]
            for s, fut in zip(seeds, futures):
                try:
                    results.append((s, *fut.result(), None))
                except Exception as exc:  # noqa: BLE001 - record and keep going
                    results.append((s, None, None, str(exc)))
    else:
        for w in work:
            try:
                results.append((w[2], *_run_instance(w), None))
            except Exception as exc:  # noqa: BLE001 - record and keep going
                log.exception("instance %s failed", w[2])
                results.append((w[2], None, None, str(exc)))
    return results


def write_batch(results, params: SolverParams, out_dir) -> dict:
    out = Path(out_dir)
    rows = []
    curves = []
    for seed, summ, curve, err in results:
        if summ is None:
            rows.append([seed, "error", "", "", "", "", "", "", "", "", err])
            continue
        curves.append(curve)
        rows.append(
            [
                seed,
                "resolved" if summ["converged"] else "partial",
                summ["flights"],
                summ["straight_peak"],
                summ["initial_conflicting_flights"],
                summ["iterations"],
                summ["unresolved_count"],
                repr(summ["straight_share"]),
                repr(summ["mean_extension"]),
                repr(summ["max_extension"]),
                "",
            ]
        )
    header = [
        "seed", "status", "flights", "peak_simultaneous", "initial_conflicting_flights",
        "iterations", "unresolved", "straight_share", "mean_extension", "max_extension", "error",
    ]
    write_atomic(out / "instances.csv", csv_text(header, rows))
    unresolved, mean_conf = conflict_curves(curves, params.N)
    write_atomic(
        out / "unresolved_curve.csv",
        csv_text(["iteration", "unresolved_instances"], list(enumerate(unresolved))),
    )
    write_atomic(
        out / "conflicts_curve.csv",
        csv_text(["iteration", "mean_conflicting_flights"], [(i, repr(v)) for i, v in enumerate(mean_conf)]),
    )
    ok = [r[1] for r in results if r[1] is not None]
    peaks = np.array([s["straight_peak"] for s in ok], dtype=float)
    flights = np.array([s["flights"] for s in ok], dtype=float)
    init = np.array([s["initial_conflicting_flights"] for s in ok], dtype=float)
    agg = {
        "instances": len(results),
        "errors": sum(1 for r in results if r[1] is None),
        "resolved": sum(1 for s in ok if s["converged"]),
        "resolved_by_iteration_5": sum(1 for s in ok if s["converged"] and s["iterations"] <= 5),
        "peak_mean": float(peaks.mean()) if len(peaks) else 0.0,
        "peak_std": float(peaks.std()) if len(peaks) else 0.0,
        "peak_min": int(peaks.min()) if len(peaks) else 0,
        "peak_max": int(peaks.max()) if len(peaks) else 0,
        "initial_conflict_fraction": float(np.mean(init / np.maximum(flights, 1))) if len(ok) else 0.0,
        "straight_share": float(np.mean([s["straight_share"] for s in ok])) if ok else 1.0,
        "mean_extension": float(np.mean([s["mean_extension"] for s in ok])) if ok else 1.0,
        "max_extension": float(max(s["max_extension"] for s in ok)) if ok else 1.0,
    }
    write_atomic(out / "batch_summary.json", dumps(agg))
    return agg


def cmd_batch(args: argparse.Namespace) -> int:
    if args.instances < 1:
        raise ScenarioError("--instances must be >= 1")
    params = build_params(args)
    gen_args = {k: v for k, v in vars(_gen_config(args, 0)).items() if k != "seed"}
    seeds = [args.seed + i for i in range(args.instances)]
    t0 = time.perf_counter()
    results = run_batch(gen_args, params, seeds, args.out, args.jobs)
    agg = write_batch(results, params, args.out)
    print(
        f"{agg['resolved']}/{agg['instances']} resolved ({agg['resolved_by_iteration_5']} by iteration 5), "
        f"peak {agg['peak_mean']:.1f} +/- {agg['peak_std']:.1f}, wall {time.perf_counter() - t0:.1f}s"
    )
    if agg["errors"]:
        return EXIT_ERROR
    return EXIT_OK if agg["resolved"] == agg["instances"] else EXIT_PARTIAL


def cmd_report(args: argparse.Namespace) -> int:
    d = Path(args.dir)
    if (d / "batch_summary.json").exists():
        agg = json.loads((d / "batch_summary.json").read_text())
        for k, v in agg.items():
            print(f"{k:28s} {v}")
        print((d / "unresolved_curve.csv").read_text(), end="")
        return EXIT_OK if agg["resolved"] == agg["instances"] else EXIT_PARTIAL
    summ = json.loads((d / "summary.json").read_text())
    for k, v in summ.items():
        print(f"{k:28s} {v}")
    print((d / "iterations.csv").read_text(), end="")
    return EXIT_OK if summ["converged"] else EXIT_PARTIAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crp3d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random scenario")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".", help="output directory")
    _add_generator_flags(g)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve a scenario file")
    s.add_argument("scenario", type=Path)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", default=".", help="output directory")
    _add_solver_flags(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("batch", help="generate and solve seeded instances")
    b.add_argument("--seed", type=int, default=0, help="first instance seed")
    b.add_argument("--instances", type=int, default=20)
    b.add_argument("--jobs", type=int, default=1, help="worker processes")
    b.add_argument("--out", default="batch", help="output directory")
    _add_generator_flags(b)
    _add_solver_flags(b)
    b.set_defaults(func=cmd_batch)

    r = sub.add_parser("report", help="print the summary of a solve or batch output directory")
    r.add_argument("dir")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CD_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
