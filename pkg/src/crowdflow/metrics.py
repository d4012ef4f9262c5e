"""Evaluation metrics: MCME, MPPR and the density-map MSE loss.

MPPR draws its patch corners from numpy's PCG64 bit generator, whose output
stream for a given seed is fixed across platforms and numpy versions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from crowdflow.core import CentroidSet, DensityMap, FrameDims, frame_diagonal


def _nearest(dist_row: np.ndarray, keys: list[tuple[float, float]]) -> int:
    """Index of the minimum distance; ties go to the smallest (y, x)."""
    best = dist_row.min()
    tied = np.flatnonzero(dist_row == best)
    if len(tied) == 1:
        return int(tied[0])
    return int(min(tied, key=lambda j: keys[j]))


def _pair_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])


def mcme_pairs(pred: CentroidSet, gt: CentroidSet) -> set[tuple[int, int]]:
    """(pred index, gt index) pairs of the symmetric nearest-neighbor association."""
    if len(pred) == 0 or len(gt) == 0:
        raise ValueError("MCME undefined on empty set")
    dist = _pair_distances(pred.as_array(), gt.as_array())
    gt_keys = [c.sort_key() for c in gt]
    pred_keys = [c.sort_key() for c in pred]
    forward = {(i, _nearest(dist[i], gt_keys)) for i in range(len(pred))}
    backward = {(_nearest(dist[:, j], pred_keys), j) for j in range(len(gt))}
    return forward | backward


def mcme(pred: CentroidSet, gt: CentroidSet) -> float:
    """Mean Coordinate Matching Error in pixels."""
    pairs = mcme_pairs(pred, gt)
    dist = _pair_distances(pred.as_array(), gt.as_array())
    return float(sum(dist[i, j] for i, j in sorted(pairs)) / len(pairs))


def normalized_mcme(pred: CentroidSet, gt: CentroidSet, dims: FrameDims) -> float:
    return mcme(pred, gt) / frame_diagonal(dims)


@dataclass(frozen=True, slots=True)
class MpprConfig:
    n_p: int = 1000
    patch_w: int = 150
    patch_h: int = 150
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_p < 1:
            raise ValueError(f"n_p must be at least 1, got {self.n_p}")
        if self.patch_w < 1 or self.patch_h < 1:
            raise ValueError("patch dimensions must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True, slots=True)
class MpprTally:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def precision(self) -> float | None:
        denom = self.tp + self.fp
        return self.tp / denom if denom else None

    @property
    def recall(self) -> float | None:
        denom = self.tp + self.fn
        return self.tp / denom if denom else None


# Per-sample outcome codes returned by classify_patches.
TP, TN, FP, FN = 0, 1, 2, 3


def sample_patch_corners(dims: FrameDims, config: MpprConfig) -> np.ndarray:
    """(n_p, 2) top-left corners drawn uniformly over [0, width) x [0, height)."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    u = rng.random((config.n_p, 2))
    return u * np.array([dims.width, dims.height], dtype=np.float64)


def _active(corners: np.ndarray, dims: FrameDims, config: MpprConfig, centroids: CentroidSet) -> np.ndarray:
    if len(centroids) == 0:
        return np.zeros(len(corners), dtype=bool)
    pts = centroids.as_array()
    x0 = corners[:, 0:1]
    y0 = corners[:, 1:2]
    x1 = np.minimum(x0 + config.patch_w, dims.width)
    y1 = np.minimum(y0 + config.patch_h, dims.height)
    px, py = pts[None, :, 0], pts[None, :, 1]
    inside = (px >= x0) & (px < x1) & (py >= y0) & (py < y1)
    return inside.any(axis=1)


def classify_patches(
    gt: CentroidSet,
    pred: CentroidSet,
    dims: FrameDims,
    config: MpprConfig,
    corners: np.ndarray | None = None,
) -> np.ndarray:
    """Outcome code (TP/TN/FP/FN) for every sampled patch.

    A patch is [x, x + w) x [y, y + h) clipped to the frame, and is active for a
    centroid set when it holds at least one of its centroids.
    """
    if corners is None:
        corners = sample_patch_corners(dims, config)
    g = _active(corners, dims, config, gt)
    p = _active(corners, dims, config, pred)
    codes = np.full(len(corners), TN, dtype=np.int8)
    codes[g & p] = TP
    codes[~g & p] = FP
    codes[g & ~p] = FN
    return codes


def mppr_frame(gt: CentroidSet, pred: CentroidSet, dims: FrameDims, config: MpprConfig | None = None) -> MpprTally:
    config = config or MpprConfig()
    counts = np.bincount(classify_patches(gt, pred, dims, config), minlength=4)
    return MpprTally(tp=int(counts[TP]), tn=int(counts[TN]), fp=int(counts[FP]), fn=int(counts[FN]))


def mppr_frames(frames, dims: FrameDims, config: MpprConfig | None = None) -> list[MpprTally]:
    """Per-frame tallies; frame at position i is sampled with seed ``config.seed + i``."""
    config = config or MpprConfig()
    tallies = []
    for i, (gt, pred) in enumerate(frames):
        cfg = MpprConfig(config.n_p, config.patch_w, config.patch_h, config.seed + i)
        tallies.append(mppr_frame(gt, pred, dims, cfg))
    return tallies


def mean_defined(values) -> float | None:
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None


def mppr_sequence(frames, dims: FrameDims, config: MpprConfig | None = None) -> tuple[float, float]:
    """Sequence precision and recall: means over frames where each is defined."""
    tallies = mppr_frames(frames, dims, config)
    precision = mean_defined(t.precision for t in tallies)
    recall = mean_defined(t.recall for t in tallies)
    if precision is None:
        raise ValueError("precision is undefined on every frame of the sequence")
    if recall is None:
        raise ValueError("recall is undefined on every frame of the sequence")
    return precision, recall


def containment_probability(dims: FrameDims, w: int, h: int) -> float:
    """Chance that a uniformly anchored w x h patch lies entirely inside the frame."""
    lx, ly = dims.width, dims.height
    return max(0, lx - w) * max(0, ly - h) / (lx * ly)


def fully_contained(corners: np.ndarray, dims: FrameDims, w: int, h: int) -> np.ndarray:
    return (corners[:, 0] + w <= dims.width) & (corners[:, 1] + h <= dims.height)


def map_mse(a: DensityMap, b: DensityMap) -> float:
    if a.dims != b.dims:
        raise ValueError(
            f"map dimensions differ: {a.dims.width}x{a.dims.height} vs {b.dims.width}x{b.dims.height}"
        )
    return float(np.mean((a.values - b.values) ** 2))


def multi_output_loss(c_pred: DensityMap, c_gt: DensityMap, d_pred: DensityMap, d_gt: DensityMap) -> float:
    """Centroid-map MSE plus crowd-map MSE."""
    return map_mse(c_pred, c_gt) + map_mse(d_pred, d_gt)

