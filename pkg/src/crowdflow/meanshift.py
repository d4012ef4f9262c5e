"""Flat-kernel Mean Shift with k-NN bandwidth estimation.

Behaves like the common scikit-learn defaults: every point seeds a
trajectory, a seed moves to the mean of all points inside the closed ball of
radius ``bandwidth``, converged modes are deduplicated by support, and every
point is labeled with its nearest surviving mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from crowdflow.core import CentroidSet, array_to_points, points_to_array


class DegenerateBandwidthError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class MeanShiftConfig:
    bandwidth: float | None = None
    quantile: float = 0.3
    max_iterations: int = 300
    convergence_tol_factor: float = 1e-3

    def __post_init__(self) -> None:
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive when given, got {self.bandwidth}")
        if not 0 < self.quantile <= 1:
            raise ValueError(f"quantile must be in (0, 1], got {self.quantile}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True, slots=True)
class ClusteringResult:
    modes: CentroidSet
    labels: tuple[int, ...]
    bandwidth: float

    def __post_init__(self) -> None:
        n = len(self.modes)
        if any(not 0 <= lab < n for lab in self.labels):
            raise ValueError("every label must index an existing mode")


def estimate_bandwidth(points, quantile: float = 0.3) -> float:
    """Mean over points of the distance to their k-th nearest neighbor.

    k = max(1, floor(n * quantile)) and each point counts as its own first
    neighbor.
    """
    X = _as_array(points)
    n = len(X)
    if n < 2:
        raise ValueError(f"bandwidth estimation needs at least 2 points, got {n}")
    if not 0 < quantile <= 1:
        raise ValueError(f"quantile must be in (0, 1], got {quantile}")
    k = max(1, int(n * quantile))
    d = cdist(X, X)
    d.sort(axis=1)
    return float(d[:, k - 1].mean())


def _as_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return points_to_array(list(points))


def _climb(seed: np.ndarray, X: np.ndarray, bandwidth: float, tol: float, max_iter: int) -> np.ndarray:
    mean = seed
    for _ in range(max_iter):
        within = np.sum((X - mean) ** 2, axis=1) <= bandwidth * bandwidth
        if not within.any():
            break
        new_mean = X[within].mean(axis=0)
        shift = np.hypot(*(new_mean - mean))
        mean = new_mean
        if shift < tol:
            break
    return mean


def mean_shift_cluster(points, config: MeanShiftConfig | None = None, frame_id: int = 0) -> ClusteringResult:
    config = config or MeanShiftConfig()
    X = _as_array(points)
    n = len(X)
    if n == 0:
        raise ValueError("mean shift needs at least one point")
    if n == 1:
        # Fixed point of the update for any bandwidth.
        bw = config.bandwidth if config.bandwidth is not None else 0.0
        return ClusteringResult(CentroidSet(frame_id, array_to_points(X)), (0,), bw)

    bandwidth = config.bandwidth
    if bandwidth is None:
        bandwidth = estimate_bandwidth(X, config.quantile)
    if not bandwidth > 0:
        raise DegenerateBandwidthError(
            f"degenerate bandwidth {bandwidth}: points are coincident; pass an explicit bandwidth"
        )

    tol = config.convergence_tol_factor * bandwidth
    candidates = np.array([_climb(x, X, bandwidth, tol, config.max_iterations) for x in X])
    candidates = np.unique(candidates, axis=0)

    support = np.sum(cdist(candidates, X) <= bandwidth, axis=1)
    # Descending support, then ascending (y, x).
    order = np.lexsort((candidates[:, 0], candidates[:, 1], -support))
    accepted: list[np.ndarray] = []
    for idx in order:
        c = candidates[idx]
        if support[idx] == 0:
            continue
        if all(np.hypot(*(c - a)) > bandwidth for a in accepted):
            accepted.append(c)
    modes = np.array(accepted)

    labels = np.argmin(cdist(X, modes), axis=1)
    return ClusteringResult(
        CentroidSet(frame_id, array_to_points(modes)),
        tuple(int(v) for v in labels),
        float(bandwidth),
    )


def cluster_centroids(points, config: MeanShiftConfig | None = None, frame_id: int = 0) -> CentroidSet:
    """Mean Shift modes for one frame; empty input yields an empty set."""
    if len(points) == 0:
        return CentroidSet(frame_id, ())
    return mean_shift_cluster(points, config, frame_id).modes

