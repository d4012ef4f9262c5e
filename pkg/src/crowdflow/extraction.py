"""Centroid extraction from density heatmaps.

Normalize to [0, 1], zero everything below tau, then one centroid per
connected blob at its intensity-weighted center of mass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from crowdflow.core import CentroidSet, DensityMap, Point


class Connectivity(enum.Enum):
    FOUR = 4
    EIGHT = 8


_STRUCTURES = {
    Connectivity.FOUR: ndimage.generate_binary_structure(2, 1),
    Connectivity.EIGHT: ndimage.generate_binary_structure(2, 2),
}


@dataclass(frozen=True, slots=True)
class ExtractionConfig:
    tau: float = 1.0 / 3.0
    min_area: int = 4
    connectivity: Connectivity = Connectivity.EIGHT

    def __post_init__(self) -> None:
        _check_tau(self.tau)
        if self.min_area < 0:
            raise ValueError(f"min_area must be non-negative, got {self.min_area}")


def _check_tau(tau: float) -> None:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")


def normalize_minmax(dmap: DensityMap) -> DensityMap:
    """Affine rescale to [0, 1]; a constant map becomes all zeros."""
    v = dmap.values
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return dmap.with_values(np.zeros_like(v))
    out = (v - lo) / (hi - lo)
    # Guard against rounding pushing the extremes off [0, 1].
    np.clip(out, 0.0, 1.0, out=out)
    return dmap.with_values(out)


def threshold_map(dmap: DensityMap, tau: float) -> DensityMap:
    """Zero the cells strictly below ``tau``; the rest keep their value."""
    _check_tau(tau)
    v = dmap.values
    return dmap.with_values(np.where(v < tau, 0.0, v))


def extract_centroids(dmap: DensityMap, config: ExtractionConfig | None = None, frame_id: int = 0) -> CentroidSet:
    config = config or ExtractionConfig()
    v = threshold_map(normalize_minmax(dmap), config.tau).values
    labels, n = ndimage.label(v > 0.0, structure=_STRUCTURES[config.connectivity])
    if n == 0:
        return CentroidSet(frame_id, ())

    flat = labels.ravel()
    weights = v.ravel()
    rows, cols = np.indices(v.shape)
    area = np.bincount(flat, minlength=n + 1)
    mass = np.bincount(flat, weights=weights, minlength=n + 1)
    sx = np.bincount(flat, weights=weights * cols.ravel(), minlength=n + 1)
    sy = np.bincount(flat, weights=weights * rows.ravel(), minlength=n + 1)

    blobs = []
    for lab in range(1, n + 1):
        if area[lab] < config.min_area or mass[lab] <= 0:
            continue
        blobs.append((float(mass[lab]), Point(sx[lab] / mass[lab], sy[lab] / mass[lab])))
    blobs.sort(key=lambda b: (-b[0], b[1].y, b[1].x))

    seen: set[Point] = set()
    centroids = []
    for _, p in blobs:
        if p not in seen:
            seen.add(p)
            centroids.append(p)
    return CentroidSet(frame_id, tuple(centroids))
