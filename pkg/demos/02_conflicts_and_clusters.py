"""Detect losses of separation on one level, score them and cluster them."""

from crp3d import Assignment, GenConfig, SolverParams, generate
from crp3d.clustering import cluster_level_events
from crp3d.conflict import detect_conflicts, flight_scores

params = SolverParams()
scenario = generate(GenConfig(flights=120, seed=1))

# everybody straight on level 0
straight = Assignment.straight(len(scenario))
report = detect_conflicts(scenario, straight, params)
print(f"{len(scenario)} flights, {report.violating_pairs} violating pairs, {len(report.flights)} flights in conflict")

# closest approaches come out as one event half per flight of each pair
events = report.level_events(0)
worst = min(report.events[0], key=lambda e: e.distance)
print("closest pair", scenario.flights[worst.flight_a].id, scenario.flights[worst.flight_b].id,
      f"{worst.distance:.2f} nmi at t = {worst.time * 60:.1f} min")

# k-means over (x, y, V0 t), roughly five halves per cluster
clusters = cluster_level_events(events, report.pair_distance, params, seed=0)
print(len(events), "event halves in", len(clusters), "clusters")
for c in clusters[:5]:
    print(f"  total score {c.total_score:6.2f}  {len(c.members):3d} halves  flights {[scenario.flights[f].id for f in c.flights]}")

# per-flight score: the worst half a flight owns
scores = flight_scores(events, report.pair_distance, params)
top = sorted(scores.items(), key=lambda kv: -kv[1])[:5]
print("top contributors", [(scenario.flights[f].id, round(s, 2)) for f, s in top])
