"""PNG renders of heatmaps and flow reports.

Heatmaps are min-max scaled and mapped through matplotlib's ``inferno``
colormap, which is monotone in lightness (black at 0, pale yellow at 1).
"""

from __future__ import annotations

import math

import numpy as np
from matplotlib import colormaps
from PIL import Image, ImageDraw

from crowdflow.core import DensityMap, FrameDims, Point
from crowdflow.extraction import normalize_minmax

COLORMAP = "inferno"
ARROW_COLOR = (0, 220, 255)
RING_START_COLOR = (255, 64, 64)
RING_END_COLOR = (64, 255, 64)
RING_RADIUS = 12


def colorize(dmap: DensityMap) -> np.ndarray:
    """(height, width, 3) uint8 RGB image of the normalized map."""
    v = normalize_minmax(dmap).values
    rgba = colormaps[COLORMAP](v, bytes=True)
    return np.ascontiguousarray(rgba[..., :3])


def render_heatmap(dmap: DensityMap, path, underlay=None, alpha: float = 0.5) -> Image.Image:
    """Write the heatmap, alpha-blended over ``underlay`` (path or PIL image) when given."""
    img = Image.fromarray(colorize(dmap))
    if underlay is not None:
        base = underlay if isinstance(underlay, Image.Image) else Image.open(underlay)
        base = base.convert("RGB")
        if base.size != img.size:
            base = base.resize(img.size, Image.BILINEAR)
        img = Image.blend(base, img, alpha)
    img.save(path, format="PNG")
    return img


def draw_arrow(draw: ImageDraw.ImageDraw, start: Point, end: Point, color=ARROW_COLOR, width: int = 2) -> None:
    draw.line([(start.x, start.y), (end.x, end.y)], fill=color, width=width)
    dx, dy = end.x - start.x, end.y - start.y
    length = math.hypot(dx, dy)
    if length == 0:
        return
    head = min(10.0, 0.4 * length)
    ux, uy = dx / length, dy / length
    left = (end.x - head * ux + 0.5 * head * uy, end.y - head * uy - 0.5 * head * ux)
    right = (end.x - head * ux - 0.5 * head * uy, end.y - head * uy + 0.5 * head * ux)
    draw.polygon([(end.x, end.y), left, right], fill=color)


def draw_ring(draw: ImageDraw.ImageDraw, center: Point, color, radius: int = RING_RADIUS) -> None:
    draw.ellipse(
        [center.x - radius, center.y - radius, center.x + radius, center.y + radius],
        outline=color,
        width=2,
    )


def render_flow(report, dims: FrameDims, path, background: Image.Image | None = None) -> Image.Image:
    """Arrows for every match, rings around unmatched centroids.

    Red rings mark starting-frame leftovers, green rings ending-frame ones.
    """
    result = getattr(report, "result", report)
    if background is None:
        img = Image.new("RGB", (dims.width, dims.height), (0, 0, 0))
    else:
        img = background.convert("RGB").resize((dims.width, dims.height))
    draw = ImageDraw.Draw(img)
    for m in result.matches:
        draw_arrow(draw, m.start, m.end)
    for p in result.unmatched_start:
        draw_ring(draw, p, RING_START_COLOR)
    for p in result.unmatched_end:
        draw_ring(draw, p, RING_END_COLOR)
    img.save(path, format="PNG")
    return img
