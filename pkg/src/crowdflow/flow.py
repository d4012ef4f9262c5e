"""Inter-frame centroid matching and compass-direction classification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from crowdflow.core import CentroidSet, DensityMap, Direction, FlowMatch, FlowResult
from crowdflow.extraction import ExtractionConfig, extract_centroids

# Sector order when counting 45-degree steps counter-clockwise from East.
_SECTORS = (
    Direction.E,
    Direction.NE,
    Direction.N,
    Direction.NW,
    Direction.W,
    Direction.SW,
    Direction.S,
    Direction.SE,
)

MATCH_METHODS = ("greedy", "optimal")


@dataclass(frozen=True, slots=True)
class MatchConfig:
    stationary_eps: float = 5.0
    method: str = "greedy"

    def __post_init__(self) -> None:
        if not self.stationary_eps >= 0:
            raise ValueError(f"stationary_eps must be non-negative, got {self.stationary_eps}")
        if self.method not in MATCH_METHODS:
            raise ValueError(f"method must be one of {MATCH_METHODS}, got {self.method!r}")


def classify_direction(displacement: tuple[float, float], config: MatchConfig | None = None) -> Direction:
    """Bin a displacement into one of eight compass sectors, or STATIONARY.

    y grows downward, so North is negative dy. Sector boundaries are
    half-open: [center - 22.5, center + 22.5).
    """
    config = config or MatchConfig()
    dx, dy = displacement
    if math.hypot(dx, dy) <= config.stationary_eps:
        return Direction.STATIONARY
    theta = math.degrees(math.atan2(-dy, dx))
    return _SECTORS[math.floor((theta + 22.5) / 45.0) % 8]


def _greedy_pairs(a: np.ndarray, b: np.ndarray, p0: CentroidSet, pk: CentroidSet) -> list[tuple[int, int]]:
    dist = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    candidates = sorted(
        ((dist[i, j], p0.centroids[i].sort_key(), pk.centroids[j].sort_key(), i, j)
         for i in range(len(a)) for j in range(len(b))),
    )
    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs = []
    target = min(len(a), len(b))
    for _, _, _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j))
        if len(pairs) == target:
            break
    return pairs


def _optimal_pairs(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int]]:
    dist = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    rows, cols = linear_sum_assignment(dist)
    return sorted((dist[i, j], int(i), int(j)) for i, j in zip(rows, cols))


def match_centroids(
    p0: CentroidSet,
    pk: CentroidSet,
    config: MatchConfig | None = None,
) -> FlowResult:
    """Pair centroids of a starting and an ending frame by minimum distance.

    The default greedy method repeatedly takes the globally shortest pair whose
    endpoints are both still free. Pairs are reported in the order chosen.
    """
    config = config or MatchConfig()
    a, b = p0.as_array(), pk.as_array()
    if len(a) and len(b):
        if config.method == "greedy":
            pairs = _greedy_pairs(a, b, p0, pk)
        else:
            pairs = [(i, j) for _, i, j in _optimal_pairs(a, b)]
    else:
        pairs = []

    matches = []
    for i, j in pairs:
        start, end = p0.centroids[i], pk.centroids[j]
        direction = classify_direction((end.x - start.x, end.y - start.y), config)
        matches.append(FlowMatch(start, end, direction))

    matched_a = {i for i, _ in pairs}
    matched_b = {j for _, j in pairs}
    return FlowResult(
        t0_frame=p0.frame_id,
        tk_frame=pk.frame_id,
        matches=tuple(matches),
        unmatched_start=tuple(c for i, c in enumerate(p0.centroids) if i not in matched_a),
        unmatched_end=tuple(c for j, c in enumerate(pk.centroids) if j not in matched_b),
    )


def detect_flow(
    map0: DensityMap,
    mapk: DensityMap,
    extraction: ExtractionConfig | None = None,
    matching: MatchConfig | None = None,
    t0: int = 0,
    tk: int = 1,
) -> FlowResult:
    """Extract centroids from both maps and match them."""
    if map0.dims != mapk.dims:
        raise ValueError(
            f"map dimensions differ: {map0.dims.width}x{map0.dims.height} "
            f"vs {mapk.dims.width}x{mapk.dims.height}"
        )
    c0 = extract_centroids(map0, extraction, t0)
    ck = extract_centroids(mapk, extraction, tk)
    return match_centroids(c0, ck, matching)
