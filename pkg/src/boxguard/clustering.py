"""Deterministic k-means partitioning of feature vectors.

Lloyd's algorithm with farthest-point seeding, fully determined by the
(points, k, seed, max_iter, tol) tuple so that monitor builds are
bit-reproducible. Empty clusters are dropped rather than reseeded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import DimensionMismatchError, feature_vector

DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ClusteringResult:
    """Cluster assignments (input order) and the surviving centroids."""

    assignments: tuple[int, ...]
    centroids: tuple[tuple[float, ...], ...]
    k: int
    iterations: int
    converged: bool


def choose_k(n: int) -> int:
    """Default cluster count when none is configured: max(1, floor(sqrt(n/2)))."""
    if n < 1:
        raise ValueError("cannot choose a cluster count for zero points")
    return min(n, max(1, int(math.floor(math.sqrt(n / 2.0)))))


def _seed_centers(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Farthest-point seeding: random first pick, then repeated argmax of the
    distance to the nearest chosen center. Ties resolve to the lowest index."""
    n = points.shape[0]
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        d2[chosen] = -1.0
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _wcss(points: np.ndarray, centers: np.ndarray, assign: np.ndarray) -> float:
    return float(((points - centers[assign]) ** 2).sum())


def kmeans(
    points: Sequence[Sequence[float]],
    k: int,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> ClusteringResult:
    """Cluster points into at most k groups by similarity.

    Iterates assignment / mean-update until the largest centroid displacement
    falls below ``tol`` or ``max_iter`` is reached. Clusters that lose all
    members are dropped, so the result's k may be smaller than requested.
    Identical inputs always produce identical results.
    """
    vecs = [feature_vector(p) for p in points]
    if not vecs:
        raise ValueError("cannot cluster an empty point set")
    dim = len(vecs[0])
    for v in vecs:
        if len(v) != dim:
            raise DimensionMismatchError("points have mixed dimensions")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(vecs):
        raise ValueError(f"k={k} exceeds the number of points ({len(vecs)})")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    pts = np.asarray(vecs, dtype=float)
    centers = _seed_centers(pts, k, seed)
    assign = np.zeros(len(vecs), dtype=int)
    prev_wcss = math.inf
    iterations = 0
    converged = False

    for _ in range(max_iter):
        iterations += 1
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        counts = np.bincount(assign, minlength=centers.shape[0])
        keep = counts > 0
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, pts)
        new_centers = sums[keep] / counts[keep, None]
        if keep.all():
            moved = float(
                np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
            )
        else:
            # A cluster was dropped; indices shift, so keep iterating.
            remap = np.cumsum(keep) - 1
            assign = remap[assign]
            moved = math.inf
        centers = new_centers
        wcss = _wcss(pts, centers, assign)
        assert wcss <= prev_wcss * (1.0 + 1e-9) + 1e-12, "within-cluster SSE increased"
        prev_wcss = wcss
        if moved < tol:
            converged = True
            break

    return ClusteringResult(
        assignments=tuple(int(a) for a in assign),
        centroids=tuple(tuple(float(c) for c in row) for row in centers),
        k=int(centers.shape[0]),
        iterations=iterations,
        converged=converged,
    )
