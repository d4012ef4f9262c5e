import numpy as np
from PIL import Image

from crowdflow import render
from crowdflow.core import DensityMap, Direction, FlowMatch, FlowResult, FrameDims, Point
from crowdflow.io import FlowReport


def test_all_zero_map_is_uniform_lowest_color(tmp_path):
    p = tmp_path / "z.png"
    render.render_heatmap(DensityMap.zeros(FrameDims(8, 6)), p)
    px = np.asarray(Image.open(p))
    lowest = render.colorize(DensityMap(FrameDims(1, 1), np.zeros((1, 1))))[0, 0]
    assert px.shape == (6, 8, 3)
    assert np.all(px == lowest)


def test_single_max_cell_is_single_highest_pixel(tmp_path):
    v = np.zeros((6, 8))
    v[2, 5] = 3.0
    p = tmp_path / "one.png"
    render.render_heatmap(DensityMap(FrameDims(8, 6), v), p)
    px = np.asarray(Image.open(p)).astype(int)
    brightness = px.sum(axis=2)
    assert np.argwhere(brightness == brightness.max()).tolist() == [[2, 5]]
    assert np.sum(np.any(px != px[0, 0], axis=2)) == 1


def test_colormap_is_monotone_in_luminance():
    v = np.linspace(0, 1, 256)[None, :]
    rgb = render.colorize(DensityMap(FrameDims(256, 1), v)).astype(float)[0]
    lum = 0.2126 * rgb[:, 0] + 0.7152 * rgb[:, 1] + 0.0722 * rgb[:, 2]
    assert np.all(np.diff(lum) >= -1.0)
    assert lum[-1] > lum[0]


def test_underlay_blend(tmp_path):
    under = Image.new("RGB", (8, 6), (200, 0, 0))
    p = tmp_path / "b.png"
    render.render_heatmap(DensityMap.zeros(FrameDims(8, 6)), p, underlay=under, alpha=0.5)
    lowest = render.colorize(DensityMap.zeros(FrameDims(1, 1)))[0, 0].astype(int)
    px = np.asarray(Image.open(p)).astype(int)
    assert abs(px[0, 0, 0] - (200 + lowest[0]) / 2) <= 1


def _report():
    pts = [(50, 50), (200, 60), (100, 150)]
    matches = tuple(FlowMatch(Point(x, y), Point(x + 20, y), Direction.E) for x, y in pts)
    return FlowReport(FlowResult(0, 1, matches, (), (Point(250, 180),)))


def test_flow_render_draw_calls(tmp_path, monkeypatch):
    calls = []
    real_arrow, real_ring = render.draw_arrow, render.draw_ring
    monkeypatch.setattr(render, "draw_arrow", lambda d, s, e, **kw: calls.append(("arrow", s, e)) or real_arrow(d, s, e, **kw))
    monkeypatch.setattr(render, "draw_ring", lambda d, c, color, **kw: calls.append(("ring", c, color)) or real_ring(d, c, color, **kw))
    render.render_flow(_report(), FrameDims(320, 240), tmp_path / "f.png")
    arrows = [c for c in calls if c[0] == "arrow"]
    rings = [c for c in calls if c[0] == "ring"]
    assert len(arrows) == 3
    assert arrows[0][1:] == (Point(50, 50), Point(70, 50))
    assert rings == [("ring", Point(250, 180), render.RING_END_COLOR)]
    img = Image.open(tmp_path / "f.png")
    assert img.size == (320, 240)


def test_flow_render_pixels_deterministic(tmp_path):
    a = render.render_flow(_report(), FrameDims(320, 240), tmp_path / "a.png")
    b = render.render_flow(_report(), FrameDims(320, 240), tmp_path / "b.png")
    np.testing.assert_array_equal(np.asarray(a), np.asarray(b))
    assert np.asarray(a).any()
