"""Density map synthesis: a unit-sum Gaussian stamped at every point."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from crowdflow.core import DensityMap, FrameDims, MapKind, Point

_U32_MAX = 0xFFFFFFFF


@dataclass(frozen=True, slots=True)
class DensityConfig:
    sigma: float = 10.0
    truncate: float = 4.0

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (self.truncate > 0 and math.isfinite(self.truncate)):
            raise ValueError(f"truncate must be positive and finite, got {self.truncate}")


@dataclass(frozen=True, eq=False)
class Kernel2D:
    radius: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        side = 2 * self.radius + 1
        if self.weights.shape != (side, side):
            raise ValueError(f"kernel weights must be {side}x{side}, got {self.weights.shape}")
        self.weights.setflags(write=False)


def gaussian_kernel(config: DensityConfig) -> Kernel2D:
    radius = math.ceil(config.truncate * config.sigma)
    if radius > _U32_MAX:
        raise ValueError(f"kernel radius {radius} overflows a 32-bit unsigned integer")
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    # Separable: the outer product of two unit-sum 1D kernels sums to 1.
    g = np.exp(-(offsets**2) / (2.0 * config.sigma**2))
    g /= g.sum()
    weights = np.outer(g, g)
    weights /= weights.sum()
    return Kernel2D(radius, weights)


def anchor_pixel(p: Point) -> tuple[int, int]:
    """Nearest integer pixel (col, row), halves rounded up."""
    return (math.floor(p.x + 0.5), math.floor(p.y + 0.5))


def stamp(grid: np.ndarray, kernel: Kernel2D, col: int, row: int) -> None:
    """Add ``kernel`` centered at (col, row) into ``grid``, dropping clipped mass."""
    h, w = grid.shape
    r = kernel.radius
    r0, r1 = row - r, row + r + 1
    c0, c1 = col - r, col + r + 1
    gr0, gr1 = max(r0, 0), min(r1, h)
    gc0, gc1 = max(c0, 0), min(c1, w)
    if gr0 >= gr1 or gc0 >= gc1:
        return
    grid[gr0:gr1, gc0:gc1] += kernel.weights[gr0 - r0 : gr1 - r0, gc0 - c0 : gc1 - c0]


def synthesize_map(
    points,
    dims: FrameDims,
    config: DensityConfig | None = None,
    kind: MapKind = MapKind.CENTROID,
    kernel: Kernel2D | None = None,
) -> DensityMap:
    """Sum of Gaussian stamps at ``points``.

    A prebuilt ``kernel`` may be passed to avoid rebuilding it per frame; it
    must correspond to ``config``.
    """
    config = config or DensityConfig()
    for i, p in enumerate(points):
        if not dims.contains(p):
            raise ValueError(
                f"point {i} at ({p.x}, {p.y}) is outside the {dims.width}x{dims.height} frame"
            )
    kernel = kernel or gaussian_kernel(config)
    grid = np.zeros(dims.shape, dtype=np.float64)
    for p in points:
        col, row = anchor_pixel(p)
        stamp(grid, kernel, col, row)
    return DensityMap(dims, grid, kind)
