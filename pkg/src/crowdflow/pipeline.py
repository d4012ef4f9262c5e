"""End-to-end compositions used by the CLI: ground-truth generation and evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from crowdflow.core import CentroidSet, DensityMap, FrameAnnotations, FrameDims, MapKind, array_to_points
from crowdflow.density import DensityConfig, gaussian_kernel, synthesize_map
from crowdflow.meanshift import DegenerateBandwidthError, MeanShiftConfig, mean_shift_cluster
from crowdflow.metrics import MpprConfig, mean_defined, mppr_frames, mcme, normalized_mcme

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundTruthFrame:
    frame_id: int
    centroids: CentroidSet
    centroid_map: DensityMap
    crowd_map: DensityMap


def frame_centroids(frame: FrameAnnotations, config: MeanShiftConfig | None = None) -> CentroidSet:
    """Mean Shift modes of one frame's heads.

    Frames whose heads all coincide cannot yield an estimated bandwidth; their
    distinct positions are used as centroids instead.
    """
    if not frame.heads:
        return CentroidSet(frame.frame_id, ())
    try:
        return mean_shift_cluster(frame.heads, config, frame.frame_id).modes
    except DegenerateBandwidthError:
        log.warning("frame %d: coincident heads, using their positions as centroids", frame.frame_id)
        unique = np.unique(frame.as_array(), axis=0)
        return CentroidSet(frame.frame_id, array_to_points(unique))


def generate_ground_truth(
    frames: list[FrameAnnotations],
    density: DensityConfig | None = None,
    clustering: MeanShiftConfig | None = None,
) -> list[GroundTruthFrame]:
    density = density or DensityConfig()
    kernel = gaussian_kernel(density)
    out = []
    for frame in frames:
        cents = frame_centroids(frame, clustering)
        out.append(
            GroundTruthFrame(
                frame.frame_id,
                cents,
                synthesize_map(cents.centroids, frame.dims, density, MapKind.CENTROID, kernel),
                synthesize_map(frame.heads, frame.dims, density, MapKind.CROWD, kernel),
            )
        )
    return out


def evaluate_sequence(
    preds: list[CentroidSet],
    gts: list[CentroidSet],
    dims: FrameDims,
    config: MpprConfig | None = None,
) -> tuple[list[dict], dict]:
    """Per-frame MCME/MPPR records and sequence means.

    MCME is undefined (``None``) on frames where either set is empty; such
    frames are left out of the MCME mean, as undefined precision/recall frames
    are left out of theirs.
    """
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} predicted frames vs {len(gts)} ground-truth frames")
    for p, g in zip(preds, gts):
        if p.frame_id != g.frame_id:
            raise ValueError(f"frame mismatch: predicted {p.frame_id} vs ground truth {g.frame_id}")
    config = config or MpprConfig()
    tallies = mppr_frames(list(zip(gts, preds)), dims, config)

    records = []
    for p, g, t in zip(preds, gts, tallies):
        defined = len(p) > 0 and len(g) > 0
        records.append(
            {
                "frame": p.frame_id,
                "n_pred": len(p),
                "n_gt": len(g),
                "mcme": mcme(p, g) if defined else None,
                "normalized_mcme": normalized_mcme(p, g, dims) if defined else None,
                "tp": t.tp,
                "tn": t.tn,
                "fp": t.fp,
                "fn": t.fn,
                "precision": t.precision,
                "recall": t.recall,
            }
        )
    summary = {
        "summary": True,
        "frames": len(records),
        "mcme": mean_defined(r["mcme"] for r in records),
        "normalized_mcme": mean_defined(r["normalized_mcme"] for r in records),
        "precision": mean_defined(r["precision"] for r in records),
        "recall": mean_defined(r["recall"] for r in records),
        "n_p": config.n_p,
        "patch_w": config.patch_w,
        "patch_h": config.patch_h,
        "seed": config.seed,
    }
    return records, summary
