"""Weighted K-means++ seeding, Lloyd refinement, and clustering objectives.

Seeding order is load-bearing: the unlearning rule keeps the ordered
prefix of centroids chosen before the first removed one and resamples
the tail, so `CentroidList` preserves selection order and the positions
of the chosen input points.

A point with integer weight w behaves exactly like w unit-weight copies,
both in seeding probabilities and in cluster means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    DataError,
    InfeasibleError,
    OracleScaleError,
    ProtocolError,
    UndefinedObjectiveError,
)

_BRUTE_FORCE_MAX_N = 12


@dataclass
class WeightedDataset:
    points: np.ndarray            # (n, d) float64
    weights: np.ndarray = field(default=None)  # (n,) positive float64

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise DataError("points must be a nonempty n x d matrix")
        if not np.all(np.isfinite(self.points)):
            raise DataError("points contain non-finite entries")
        if self.weights is None:
            self.weights = np.ones(self.points.shape[0], dtype=np.float64)
        else:
            self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
            if self.weights.shape != (self.points.shape[0],):
                raise DataError("weights must be one per point")
            if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
                raise DataError("weights must be positive and finite")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def distinct_points(self) -> int:
        return np.unique(self.points, axis=0).shape[0]

    def total_weight(self) -> float:
        return float(np.sum(self.weights))


@dataclass
class CentroidList:
    """Ordered centroids with per-centroid cluster sizes.

    ``indices`` holds the positions of the seeded points in the source
    dataset (None after Lloyd refinement, whose centroids are means).
    """

    centers: np.ndarray           # (K, d)
    sizes: np.ndarray             # (K,) weighted cluster sizes
    indices: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.centers.shape[0]


def assign(data: WeightedDataset, centers: np.ndarray) -> np.ndarray:
    """Nearest-centroid label per point, ties to the lowest index."""
    labels, _ = kernels.assign_points(data.points, np.ascontiguousarray(centers))
    return labels


def objective(data: WeightedDataset, centers: np.ndarray) -> float:
    """Weighted K-means objective sum_i w_i * min_k ||x_i - c_k||^2."""
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] == 0:
        raise UndefinedObjectiveError("objective needs at least one centroid")
    _, sqd = kernels.assign_points(data.points, centers)
    return math.fsum((data.weights * sqd).tolist())


def seed_tail(data: WeightedDataset, k: int, rng,
              prefix_centers: np.ndarray | None = None) -> list[int]:
    """Sample seeding positions ``len(prefix)..k-1`` by the K-means++ rule.

    With an empty prefix the first draw is weight-proportional (uniform
    for unit weights); every later draw is proportional to
    weight * squared distance to the chosen set. One uniform draw per
    selection through an inverse-CDF over the prefix sums.
    """
    points, weights = data.points, data.weights
    d2 = np.full(data.n, np.inf)
    start = 0
    if prefix_centers is not None and len(prefix_centers):
        start = len(prefix_centers)
        for c in np.ascontiguousarray(prefix_centers, dtype=np.float64):
            kernels.update_min_sqdist(points, c, d2)
    chosen: list[int] = []
    for step in range(start, k):
        pw = weights.copy() if step == 0 else weights * d2
        cum = np.cumsum(pw)
        total = cum[-1]
        if not total > 0:
            raise InfeasibleError("no sampling mass left: fewer distinct points than K")
        u = rng.random() * total
        idx = int(np.searchsorted(cum, u, side="right"))
        idx = min(idx, data.n - 1)
        chosen.append(idx)
        kernels.update_min_sqdist(points, points[idx], d2)
    return chosen


def kmeanspp_init(data: WeightedDataset, k: int, rng) -> CentroidList:
    """K-means++ seeding; every centroid is an actual data point."""
    if k < 1:
        raise InfeasibleError("K must be >= 1")
    if k > data.distinct_points():
        raise InfeasibleError(f"K={k} exceeds {data.distinct_points()} distinct points")
    indices = seed_tail(data, k, rng)
    centers = data.points[indices].copy()
    labels = assign(data, centers)
    sizes = np.bincount(labels, weights=data.weights, minlength=k).astype(np.float64)
    return CentroidList(centers=centers, sizes=sizes, indices=np.asarray(indices, dtype=np.int64))


def lloyd(data: WeightedDataset, init: CentroidList, t_max: int = 100,
          tol: float = 1e-6) -> CentroidList:
    """Weighted Lloyd iterations until centroid movement < tol or t_max.

    An emptied cluster is re-seeded at the point currently farthest from
    its assigned centroid (deterministic; lowest index on ties).
    """
    centers = init.centers.copy()
    k = centers.shape[0]
    labels = None
    for _ in range(t_max):
        labels, sqd = kernels.assign_points(data.points, centers)
        wsum, wtot = kernels.cluster_sums(data.points, data.weights, labels, k)
        new_centers = np.empty_like(centers)
        nonempty = wtot > 0
        new_centers[nonempty] = wsum[nonempty] / wtot[nonempty, None]
        if not np.all(nonempty):
            sqd = sqd.copy()
            for c in np.flatnonzero(~nonempty):
                far = int(np.argmax(sqd))
                new_centers[c] = data.points[far]
                sqd[far] = -1.0
        movement = float(np.max(np.sqrt(np.sum((new_centers - centers) ** 2, axis=1))))
        centers = new_centers
        if movement < tol:
            break
    labels, _ = kernels.assign_points(data.points, centers)
    sizes = np.bincount(labels, weights=data.weights, minlength=k).astype(np.float64)
    return CentroidList(centers=centers, sizes=sizes, indices=None)


def kmeans_full(data: WeightedDataset, k: int, rng, t_max: int = 100,
                tol: float = 1e-6) -> CentroidList:
    """Full clustering: K-means++ seeding followed by Lloyd refinement."""
    return lloyd(data, kmeanspp_init(data, k, rng), t_max=t_max, tol=tol)


def federated_objective(client_data: list[WeightedDataset],
                        client_centers: list[np.ndarray],
                        client_representatives: list[np.ndarray],
                        server_centers: np.ndarray) -> float:
    """Objective under the induced server assignment.

    A point is charged to the server centroid nearest its local
    centroid's server-visible representative (the quantized bin center in
    the secure pipeline, the raw centroid in the plaintext one) - not to
    the server centroid nearest the point itself.
    """
    if not (len(client_data) == len(client_centers) == len(client_representatives)):
        raise ProtocolError("per-client inputs have mismatched lengths")
    server_centers = np.ascontiguousarray(server_centers, dtype=np.float64)
    if server_centers.ndim != 2 or server_centers.shape[0] == 0:
        raise UndefinedObjectiveError("server centroid list is empty")
    parts = []
    for data, local, reps in zip(client_data, client_centers, client_representatives):
        if reps is None or len(reps) != len(local):
            raise ProtocolError("missing representative for a local centroid")
        local_labels = assign(data, local)
        rep_map, _ = kernels.assign_points(
            np.ascontiguousarray(reps, dtype=np.float64), server_centers)
        target = server_centers[rep_map[local_labels]]
        diff = data.points - target
        contrib = data.weights * np.einsum("nd,nd->n", diff, diff)
        parts.append(math.fsum(contrib.tolist()))
    return math.fsum(parts)


def brute_force_optimal(data: WeightedDataset, k: int) -> tuple[np.ndarray, float]:
    """Exact optimum over all K-labelings with mean centroids (test oracle).

    Enumerates every assignment, so n is capped at 12.
    """
    n, d = data.n, data.dim
    if n > _BRUTE_FORCE_MAX_N:
        raise OracleScaleError(f"brute force capped at n={_BRUTE_FORCE_MAX_N}, got {n}")
    if k < 1:
        raise InfeasibleError("K must be >= 1")
    w = data.weights
    wx = data.points * w[:, None]
    base = float(np.sum(w * np.einsum("nd,nd->n", data.points, data.points)))
    total = k ** n
    best_phi = np.inf
    best_labels = None
    radix = k ** np.arange(n, dtype=np.int64)
    chunk = 1 << 14
    for lo in range(0, total, chunk):
        ids = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        labels = (ids[:, None] // radix[None, :]) % k  # (chunk, n)
        explained = np.zeros(ids.shape[0], dtype=np.float64)
        for c in range(k):
            mask = (labels == c).astype(np.float64)
            wtot = mask @ w
            sums = mask @ wx  # (chunk, d)
            good = wtot > 0
            explained[good] += np.einsum("md,md->m", sums[good], sums[good]) / wtot[good]
        phi = base - explained
        arg = int(np.argmin(phi))
        if phi[arg] < best_phi:
            best_phi = float(phi[arg])
            best_labels = labels[arg].copy()
    return best_labels, max(best_phi, 0.0)
