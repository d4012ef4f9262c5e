import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crowdflow.core import DensityMap, FrameDims, Point
from crowdflow.density import synthesize_map
from crowdflow.extraction import (
    Connectivity,
    ExtractionConfig,
    extract_centroids,
    normalize_minmax,
    threshold_map,
)


def row_map(values):
    return DensityMap(FrameDims(len(values), 1), np.array([values], dtype=float))


def test_minmax_affine():
    np.testing.assert_allclose(normalize_minmax(row_map([0, 5, 10])).values, [[0, 0.5, 1]])


def test_minmax_constant_map_to_zero():
    assert not normalize_minmax(row_map([3, 3, 3])).values.any()


def test_minmax_identity_on_unit_range():
    m = row_map([0, 0.25, 1, 0.5])
    np.testing.assert_array_equal(normalize_minmax(m).values, m.values)


def test_minmax_handles_negative_predictions():
    np.testing.assert_allclose(normalize_minmax(row_map([-2, 0, 2])).values, [[0, 0.5, 1]])


def test_threshold_examples():
    m = row_map([0.2, 0.4])
    np.testing.assert_array_equal(threshold_map(m, 1 / 3).values, [[0, 0.4]])
    np.testing.assert_array_equal(threshold_map(m, 0).values, m.values)
    np.testing.assert_array_equal(threshold_map(row_map([0.99, 1.0]), 1.0).values, [[0, 1.0]])


@pytest.mark.parametrize("tau", [-0.1, 1.01])
def test_threshold_rejects_tau_out_of_range(tau):
    with pytest.raises(ValueError):
        threshold_map(row_map([0.5]), tau)
    with pytest.raises(ValueError):
        ExtractionConfig(tau=tau)


def test_all_zero_map_gives_no_centroids(dims):
    assert len(extract_centroids(DensityMap.zeros(dims))) == 0


def test_single_bump(dims):
    m = synthesize_map([Point(320, 256)], dims)
    c = extract_centroids(m, ExtractionConfig(tau=1 / 3), frame_id=7)
    assert c.frame_id == 7
    assert len(c) == 1
    assert math.dist(c.centroids[0].as_tuple(), (320, 256)) < 0.5


def test_two_bumps(dims):
    m = synthesize_map([Point(200, 256), Point(400, 256)], dims)
    c = extract_centroids(m, ExtractionConfig(tau=1 / 3))
    assert len(c) == 2
    for target in [(200, 256), (400, 256)]:
        assert min(math.dist(p.as_tuple(), target) for p in c) < 0.5


def test_ordering_by_mass_then_position(dims):
    m = synthesize_map([Point(500, 400), Point(100, 100), Point(100, 100.4)], dims)
    c = extract_centroids(m, ExtractionConfig(tau=0.1))
    assert math.dist(c.centroids[0].as_tuple(), (100, 100)) < 0.5
    assert math.dist(c.centroids[1].as_tuple(), (500, 400)) < 0.5


def test_min_area_drops_speckles():
    v = np.zeros((20, 20))
    v[2, 2] = 1.0
    v[10:13, 10:13] = 0.8
    m = DensityMap(FrameDims(20, 20), v)
    pts = extract_centroids(m, ExtractionConfig(tau=0.5, min_area=4)).centroids
    assert len(pts) == 1
    assert pts[0].x == pytest.approx(11.0) and pts[0].y == pytest.approx(11.0)
    assert len(extract_centroids(m, ExtractionConfig(tau=0.5, min_area=1))) == 2


def test_connectivity_diagonal_neighbors():
    v = np.zeros((6, 6))
    v[1, 1] = v[2, 2] = 1.0
    m = DensityMap(FrameDims(6, 6), v)
    eight = extract_centroids(m, ExtractionConfig(tau=0.5, min_area=1, connectivity=Connectivity.EIGHT))
    four = extract_centroids(m, ExtractionConfig(tau=0.5, min_area=1, connectivity=Connectivity.FOUR))
    assert eight.centroids == (Point(1.5, 1.5),)
    assert len(four) == 2


def test_flat_topped_blob_center():
    v = np.zeros((10, 12))
    v[2:6, 3:9] = 5.0
    c = extract_centroids(DensityMap(FrameDims(12, 10), v), ExtractionConfig(tau=0.5))
    assert c.centroids == (Point(5.5, 3.5),)


maps = st.integers(0, 2**32 - 1).map(
    lambda s: DensityMap(FrameDims(40, 30), np.random.default_rng(s).random((30, 40)) ** 4)
)


@settings(max_examples=30, deadline=None)
@given(maps, st.floats(0, 1), st.floats(0, 1))
def test_suprathreshold_pixels_shrink_with_tau(m, t1, t2):
    lo, hi = sorted((t1, t2))
    n = normalize_minmax(m)
    above_lo = threshold_map(n, lo).values > 0
    above_hi = threshold_map(n, hi).values > 0
    assert np.all(above_lo | ~above_hi)


@settings(max_examples=30, deadline=None)
@given(maps, st.sampled_from([0.0, 0.2, 1 / 3, 0.5, 0.8]))
def test_idempotent_on_processed_map(m, tau):
    cfg = ExtractionConfig(tau=tau, min_area=1)
    processed = threshold_map(normalize_minmax(m), tau)
    once = extract_centroids(m, cfg)
    again = extract_centroids(processed, cfg)
    assert len(once) == len(again)
    for a, b in zip(once, again):
        assert math.dist(a.as_tuple(), b.as_tuple()) < 1e-9


@settings(max_examples=30, deadline=None)
@given(maps, st.sampled_from([0.1, 0.5, 0.9]), st.integers(1, 6))
def test_matches_center_of_mass_and_stays_in_bbox(m, tau, min_area):
    from scipy import ndimage

    v = threshold_map(normalize_minmax(m), tau).values
    labels, n = ndimage.label(v > 0, structure=np.ones((3, 3)))
    expected = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        if np.sum(labels == lab) < min_area:
            continue
        cy, cx = ndimage.center_of_mass(v, labels, lab)
        assert sl[1].start - 1e-9 <= cx <= sl[1].stop - 1 + 1e-9
        assert sl[0].start - 1e-9 <= cy <= sl[0].stop - 1 + 1e-9
        expected.append((cx, cy))
    got = extract_centroids(m, ExtractionConfig(tau=tau, min_area=min_area))
    assert len(got) == len(expected)
    for c in got:
        assert min(math.dist(c.as_tuple(), e) for e in expected) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_round_trip_well_separated(seed, k):
    rng = np.random.default_rng(seed)
    dims = FrameDims(640, 512)
    pts: list[Point] = []
    while len(pts) < k:
        cand = Point(float(rng.uniform(45, 595)), float(rng.uniform(45, 467)))
        if all(math.dist(cand.as_tuple(), p.as_tuple()) > 80 for p in pts):
            pts.append(cand)
    m = synthesize_map(pts, dims)
    got = extract_centroids(m, ExtractionConfig(tau=1 / 3))
    assert len(got) == k
    for p in pts:
        anchor = (math.floor(p.x + 0.5), math.floor(p.y + 0.5))
        assert min(math.dist(anchor, c.as_tuple()) for c in got) < 0.5
