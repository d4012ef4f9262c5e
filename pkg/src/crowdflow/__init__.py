"""Crowd-group centroid detection, flow matching and evaluation for drone footage."""

from crowdflow.core import (
    CentroidSet,
    DensityMap,
    Direction,
    FlowMatch,
    FlowResult,
    FrameAnnotations,
    FrameDims,
    MapKind,
    Point,
    frame_diagonal,
)
from crowdflow.density import DensityConfig, gaussian_kernel, synthesize_map
from crowdflow.extraction import (
    Connectivity,
    ExtractionConfig,
    extract_centroids,
    normalize_minmax,
    threshold_map,
)
from crowdflow.flow import MatchConfig, classify_direction, detect_flow, match_centroids
from crowdflow.meanshift import MeanShiftConfig, estimate_bandwidth, mean_shift_cluster
from crowdflow.metrics import (
    MpprConfig,
    MpprTally,
    containment_probability,
    map_mse,
    mcme,
    mppr_frame,
    mppr_sequence,
    normalized_mcme,
)

__version__ = "0.1.0"
