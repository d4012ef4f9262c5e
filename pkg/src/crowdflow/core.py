"""Shared domain types.

Coordinates follow the image convention: x grows rightward, y grows
downward, so "North" means decreasing y. All types are immutable after
construction and validate their invariants in ``__post_init__``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)

    def sort_key(self) -> tuple[float, float]:
        """Ascending (y, x) ordering used for every deterministic tie-break."""
        return (self.y, self.x)


@dataclass(frozen=True, slots=True)
class FrameDims:
    width: int
    height: int

    def __post_init__(self) -> None:
        for name in ("width", "height"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"{name} must be an integer, got {value!r}")
            if not 1 <= value <= 0xFFFFFFFF:
                raise ValueError(f"{name} must be in [1, 2**32 - 1], got {value}")
            object.__setattr__(self, name, int(value))

    def contains(self, p: Point) -> bool:
        return 0.0 <= p.x < self.width and 0.0 <= p.y < self.height

    @property
    def shape(self) -> tuple[int, int]:
        """numpy (rows, cols) shape of a map with these dims."""
        return (self.height, self.width)


def frame_diagonal(dims: FrameDims) -> float:
    """Length of the frame diagonal, the largest possible in-frame distance."""
    return math.hypot(dims.width, dims.height)


@dataclass(frozen=True, slots=True)
class FrameAnnotations:
    frame_id: int
    heads: tuple[Point, ...]
    dims: FrameDims

    def __post_init__(self) -> None:
        if self.frame_id < 0:
            raise ValueError(f"frame_id must be non-negative, got {self.frame_id}")
        object.__setattr__(self, "heads", tuple(self.heads))
        for i, p in enumerate(self.heads):
            if not self.dims.contains(p):
                raise ValueError(
                    f"head {i} at ({p.x}, {p.y}) lies outside the "
                    f"{self.dims.width}x{self.dims.height} frame"
                )

    def as_array(self) -> np.ndarray:
        return points_to_array(self.heads)


class MapKind(enum.Enum):
    CROWD = 0
    CENTROID = 1


@dataclass(frozen=True, eq=False)
class DensityMap:
    """A width x height grid of non-negative intensities.

    ``values`` is a read-only float64 array of shape (height, width); row 0 is
    the top row of the frame.
    """

    dims: FrameDims
    values: np.ndarray
    kind: MapKind = MapKind.CENTROID

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != self.dims.shape:
            raise ValueError(
                f"values shape {values.shape} does not match dims "
                f"(height={self.dims.height}, width={self.dims.width})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("density map values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, dims: FrameDims, kind: MapKind = MapKind.CENTROID) -> DensityMap:
        return cls(dims, np.zeros(dims.shape), kind)

    def with_values(self, values: np.ndarray) -> DensityMap:
        return DensityMap(self.dims, values, self.kind)

    def total(self) -> float:
        return float(self.values.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DensityMap):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.kind == other.kind
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, slots=True)
class CentroidSet:
    frame_id: int
    centroids: tuple[Point, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "centroids", tuple(self.centroids))
        if len(set(self.centroids)) != len(self.centroids):
            raise ValueError(f"frame {self.frame_id}: centroid set contains duplicate points")

    def __len__(self) -> int:
        return len(self.centroids)

    def __iter__(self):
        return iter(self.centroids)

    def as_array(self) -> np.ndarray:
        return points_to_array(self.centroids)


class Direction(enum.Enum):
    N = "N"
    NE = "NE"
    E = "E"
    SE = "SE"
    S = "S"
    SW = "SW"
    W = "W"
    NW = "NW"
    STATIONARY = "STATIONARY"


@dataclass(frozen=True, slots=True)
class FlowMatch:
    start: Point
    end: Point
    direction: Direction
    displacement: tuple[float, float] = field(init=False)
    distance: float = field(init=False)

    def __post_init__(self) -> None:
        dx = self.end.x - self.start.x
        dy = self.end.y - self.start.y
        object.__setattr__(self, "displacement", (dx, dy))
        object.__setattr__(self, "distance", math.hypot(dx, dy))


@dataclass(frozen=True, slots=True)
class FlowResult:
    """Centroid matches between frames ``t0_frame`` and ``tk_frame``.

    Leftover centroids sit in ``unmatched_start`` when the starting frame had
    more centroids, or in ``unmatched_end`` when the ending frame had more.
    """

    t0_frame: int
    tk_frame: int
    matches: tuple[FlowMatch, ...] = ()
    unmatched_start: tuple[Point, ...] = ()
    unmatched_end: tuple[Point, ...] = ()

    def __post_init__(self) -> None:
        for name in ("matches", "unmatched_start", "unmatched_end"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.unmatched_start and self.unmatched_end:
            raise ValueError("unmatched centroids cannot remain on both sides of a flow result")
        starts = [m.start for m in self.matches]
        ends = [m.end for m in self.matches]
        if len(set(starts)) != len(starts) or len(set(ends)) != len(ends):
            raise ValueError("a centroid appears in more than one match")

    @property
    def unmatched_count(self) -> int:
        """Surplus centroids left unpaired, ||P_0| - |P_k||."""
        return len(self.unmatched_start) + len(self.unmatched_end)

    @property
    def n_start(self) -> int:
        return len(self.matches) + len(self.unmatched_start)

    @property
    def n_end(self) -> int:
        return len(self.matches) + len(self.unmatched_end)


def points_to_array(points) -> np.ndarray:
    """(N, 2) float array of (x, y) rows; shape (0, 2) when empty."""
    if not points:
        return np.empty((0, 2), dtype=np.float64)
    return np.array([(p.x, p.y) for p in points], dtype=np.float64)


def array_to_points(arr: np.ndarray) -> tuple[Point, ...]:
    return tuple(Point(float(x), float(y)) for x, y in np.asarray(arr, dtype=np.float64))
