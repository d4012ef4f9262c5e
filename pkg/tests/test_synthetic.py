import logging
import math

import numpy as np
import pytest

from crowdflow.core import FrameDims, Point
from crowdflow.synthetic import (
    GroupSpec,
    SceneSpec,
    generate_sequence,
    load_scene,
    save_scene,
)


def scene(*groups, n_frames=5, seed=1, dims=FrameDims(640, 512)):
    return SceneSpec(dims, n_frames, groups, seed)


def test_zero_spread_members_coincide():
    ann, truth = generate_sequence(scene(GroupSpec(Point(100, 200), 10)))
    for frame in ann:
        assert frame.heads == (Point(100, 200),) * 10
    assert all(t.centroids == (Point(100, 200),) for t in truth)


def test_rigid_translation_east():
    _, truth = generate_sequence(scene(GroupSpec(Point(100, 200), 12, 6.0, (20, 0)), n_frames=2))
    a, b = truth[0].centroids[0], truth[1].centroids[0]
    assert (b.x - a.x, b.y - a.y) == (20.0, 0.0)


def test_member_centroid_equals_center():
    ann, truth = generate_sequence(scene(GroupSpec(Point(300, 250), 15, 8.0, (3, -2)), n_frames=4))
    for t, frame in enumerate(ann):
        mean = np.mean([p.as_tuple() for p in frame.heads], axis=0)
        assert mean == pytest.approx((300 + 3 * t, 250 - 2 * t), abs=1e-9)
        assert truth[t].centroids[0] == Point(300 + 3 * t, 250 - 2 * t)


def test_death_frame_removes_group():
    ann, truth = generate_sequence(
        scene(GroupSpec(Point(100, 100), 5, 2.0), GroupSpec(Point(400, 300), 7, 2.0, death_frame=3))
    )
    assert [len(f.heads) for f in ann] == [12, 12, 12, 5, 5]
    assert [len(t) for t in truth] == [2, 2, 2, 1, 1]


def test_birth_frame_adds_group():
    ann, _ = generate_sequence(
        scene(GroupSpec(Point(100, 100), 5), GroupSpec(Point(400, 300), 7, birth_frame=2), n_frames=4)
    )
    assert [len(f.heads) for f in ann] == [5, 5, 12, 12]


def test_members_leaving_frame_are_dropped():
    ann, truth = generate_sequence(scene(GroupSpec(Point(600, 256), 20, 10.0, (15, 0)), n_frames=6))
    counts = [len(f.heads) for f in ann]
    assert counts[0] == 20
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] < 20
    for f in ann:
        assert all(f.dims.contains(p) for p in f.heads)
    # Clipped truth is the mean of the visible members.
    last = ann[-1]
    if last.heads:
        mean = np.mean([p.as_tuple() for p in last.heads], axis=0)
        assert truth[-1].centroids[0].as_tuple() == pytest.approx(tuple(mean))


def test_group_never_visible_warns(caplog):
    with caplog.at_level(logging.WARNING):
        ann, truth = generate_sequence(scene(GroupSpec(Point(5000, 5000), 3), n_frames=2))
    assert "never appears" in caplog.text
    assert all(len(f.heads) == 0 for f in ann)
    assert all(len(t) == 0 for t in truth)


def test_deterministic():
    spec = scene(GroupSpec(Point(100, 100), 9, 5.0, (1, 1)), GroupSpec(Point(300, 300), 4, 9.0), seed=42)
    a = generate_sequence(spec)
    b = generate_sequence(spec)
    assert a == b
    c = generate_sequence(SceneSpec(spec.dims, spec.n_frames, spec.groups, seed=43))
    assert c[0] != a[0]


def test_head_count_bound():
    spec = scene(GroupSpec(Point(20, 20), 30, 15.0), GroupSpec(Point(300, 300), 10, 3.0))
    ann, _ = generate_sequence(spec)
    assert all(len(f.heads) <= 40 for f in ann)


@pytest.mark.parametrize(
    "kwargs",
    [dict(members=0), dict(spread=-1), dict(birth_frame=3, death_frame=3)],
)
def test_group_validation(kwargs):
    base = dict(center0=Point(1, 1), members=1)
    base.update(kwargs)
    with pytest.raises(ValueError):
        GroupSpec(**base)


def test_scene_validation():
    with pytest.raises(ValueError):
        SceneSpec(FrameDims(10, 10), 0, ())


def test_scene_file_round_trip(tmp_path):
    spec = scene(GroupSpec(Point(10.5, 20), 3, 1.5, (2, -1), 1, 4), seed=7)
    path = tmp_path / "scene.json"
    save_scene(spec, path)
    assert load_scene(path) == spec


def test_scene_file_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"width": 10}')
    with pytest.raises(ValueError, match="malformed scene"):
        load_scene(path)
    path.write_text("not json")
    with pytest.raises(ValueError, match="invalid scene JSON"):
        load_scene(path)
