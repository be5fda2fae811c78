"""k-means over min-distance events.

Within one flight level the position-time distance is the Euclidean distance
of the embedding ``(x, y, V0*t)``, so plain Euclidean k-means on embedded
points clusters events under that metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.spatial.distance import cdist

from .conflict import EventArray, PairKey, ccs_scores
from .model import PosTime, SolverParams

MAX_LLOYD_ITERATIONS = 100
EVENTS_PER_CLUSTER = 5


def embed(p: PosTime, V0: float) -> np.ndarray:
    return np.array([p.x, p.y, V0 * p.t])


def choose_k(event_count: int) -> int:
    """One cluster per five events, at least one cluster for a nonempty set."""
    if event_count <= 0:
        return 0
    return max(1, event_count // EVENTS_PER_CLUSTER)


def _seed_centroids(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    # D^2-weighted seeding; points far from every chosen centroid are favoured
    n = len(X)
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centroids[i] = X[idx]
        d2 = np.minimum(d2, ((X - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans(points, k: int, seed: int | np.random.Generator | None = 0, max_iter: int = MAX_LLOYD_ITERATIONS):
    """Lloyd's algorithm with D^2 seeding.

    Returns ``(labels, centroids)``. ``k`` is clamped to the number of points.
    At return every point is labelled with its nearest centroid (ties go to
    the lower centroid index).
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("kmeans needs a nonempty 2-D point array")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, len(X))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    centroids = _seed_centroids(X, k, rng)
    labels = np.argmin(cdist(X, centroids, "sqeuclidean"), axis=1)
    for _ in range(max_iter):
        for j in range(k):
            mask = labels == j
            if mask.any():
                centroids[j] = X[mask].mean(axis=0)
            else:
                # reseed an empty cluster at the point worst served by its centroid
                own = ((X - centroids[labels]) ** 2).sum(axis=1)
                far = int(np.argmax(own))
                centroids[j] = X[far]
                labels[far] = j
        new_labels = np.argmin(cdist(X, centroids, "sqeuclidean"), axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids


def within_cluster_ss(points, labels, centroids) -> float:
    X = np.asarray(points, dtype=float)
    return float(((X - centroids[labels]) ** 2).sum())


@dataclass
class EventCluster:
    """A cluster of event halves of one level.

    ``members`` index into the level's :class:`EventArray` and are sorted by
    contribution score, highest first. ``flights`` lists owning flights in the
    same order, minus any flight already listed by an earlier cluster.
    """

    members: list[int]
    scores: list[float]
    centroid: np.ndarray
    flights: list[int]

    @property
    def total_score(self) -> float:
        return float(sum(self.scores))


def cluster_level_events(
    events: EventArray,
    pair_distance: Mapping[PairKey, float],
    params: SolverParams,
    seed: int | np.random.Generator | None = 0,
    k: int | None = None,
) -> list[EventCluster]:
    """Cluster one level's violating events and order clusters and their flights."""
    n = len(events)
    if n == 0:
        return []
    if k is None:
        k = choose_k(n)
    X = events.embedded(params.V0)
    labels, centroids = kmeans(X, k, seed)
    scores = ccs_scores(events, pair_distance, params)

    raw = []
    for j in range(len(centroids)):
        idx = np.flatnonzero(labels == j)
        if len(idx) == 0:
            continue
        idx = sorted(idx.tolist(), key=lambda i: (-scores[i], i))
        raw.append((idx, centroids[j]))
    raw.sort(key=lambda c: (-float(sum(scores[i] for i in c[0])), c[0][0]))

    taken: set[int] = set()
    clusters = []
    for idx, centroid in raw:
        flights = []
        for i in idx:
            f = int(events.flight[i])
            if f not in taken:
                taken.add(f)
                flights.append(f)
        clusters.append(
            EventCluster(
                members=idx,
                scores=[float(scores[i]) for i in idx],
                centroid=np.asarray(centroid, dtype=float).copy(),
                flights=flights,
            )
        )
    return clusters
