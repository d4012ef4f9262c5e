"""Synthetic crowd sequences: rigid groups of head dots moving at constant velocity."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from crowdflow.core import CentroidSet, FrameAnnotations, FrameDims, Point

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class GroupSpec:
    center0: Point
    members: int
    spread: float = 0.0
    velocity: tuple[float, float] = (0.0, 0.0)
    birth_frame: int = 0
    death_frame: int | None = None

    def __post_init__(self) -> None:
        if self.members < 1:
            raise ValueError(f"a group needs at least one member, got {self.members}")
        if self.spread < 0:
            raise ValueError(f"spread must be non-negative, got {self.spread}")
        if self.birth_frame < 0:
            raise ValueError("birth_frame must be non-negative")
        if self.death_frame is not None and self.death_frame <= self.birth_frame:
            raise ValueError(
                f"death_frame ({self.death_frame}) must come after birth_frame ({self.birth_frame})"
            )
        object.__setattr__(self, "velocity", (float(self.velocity[0]), float(self.velocity[1])))

    def alive(self, t: int) -> bool:
        return t >= self.birth_frame and (self.death_frame is None or t < self.death_frame)

    def center(self, t: int) -> tuple[float, float]:
        return (self.center0.x + t * self.velocity[0], self.center0.y + t * self.velocity[1])


@dataclass(frozen=True, slots=True)
class SceneSpec:
    dims: FrameDims
    n_frames: int
    groups: tuple[GroupSpec, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ValueError(f"n_frames must be at least 1, got {self.n_frames}")
        object.__setattr__(self, "groups", tuple(self.groups))


def _member_offsets(rng: np.random.Generator, group: GroupSpec) -> np.ndarray:
    offsets = rng.normal(0.0, 1.0, size=(group.members, 2)) * group.spread
    # Zero-mean offsets keep the member centroid exactly on the group center.
    return offsets - offsets.mean(axis=0)


def generate_sequence(spec: SceneSpec) -> tuple[list[FrameAnnotations], list[CentroidSet]]:
    """Head annotations plus the in-frame member centroid of every alive group, per frame."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    offsets = [_member_offsets(rng, g) for g in spec.groups]
    w, h = spec.dims.width, spec.dims.height

    annotations: list[FrameAnnotations] = []
    truths: list[CentroidSet] = []
    ever_visible = [False] * len(spec.groups)
    for t in range(spec.n_frames):
        heads: list[Point] = []
        centers: list[Point] = []
        for gi, (group, off) in enumerate(zip(spec.groups, offsets)):
            if not group.alive(t):
                continue
            cx, cy = group.center(t)
            pos = off + np.array([cx, cy])
            keep = (pos[:, 0] >= 0) & (pos[:, 0] < w) & (pos[:, 1] >= 0) & (pos[:, 1] < h)
            if not keep.any():
                continue
            ever_visible[gi] = True
            visible = pos[keep]
            heads.extend(Point(float(x), float(y)) for x, y in visible)
            if keep.all():
                centers.append(Point(cx, cy))
            else:
                mx, my = visible.mean(axis=0)
                centers.append(Point(float(mx), float(my)))
        annotations.append(FrameAnnotations(t, tuple(heads), spec.dims))
        truths.append(CentroidSet(t, tuple(dict.fromkeys(centers))))

    for gi, seen in enumerate(ever_visible):
        if not seen:
            log.warning("group %d never appears inside the frame during its lifetime", gi)
    return annotations, truths


def scene_from_dict(data: dict) -> SceneSpec:
    groups = []
    for g in data.get("groups", []):
        cx, cy = g["center0"]
        groups.append(
            GroupSpec(
                center0=Point(cx, cy),
                members=int(g["members"]),
                spread=float(g.get("spread", 0.0)),
                velocity=tuple(g.get("velocity", (0.0, 0.0))),
                birth_frame=int(g.get("birth_frame", 0)),
                death_frame=None if g.get("death_frame") is None else int(g["death_frame"]),
            )
        )
    return SceneSpec(
        dims=FrameDims(int(data["width"]), int(data["height"])),
        n_frames=int(data["n_frames"]),
        groups=tuple(groups),
        seed=int(data.get("seed", 0)),
    )


def scene_to_dict(spec: SceneSpec) -> dict:
    return {
        "width": spec.dims.width,
        "height": spec.dims.height,
        "n_frames": spec.n_frames,
        "seed": spec.seed,
        "groups": [
            {
                "center0": [g.center0.x, g.center0.y],
                "members": g.members,
                "spread": g.spread,
                "velocity": list(g.velocity),
                "birth_frame": g.birth_frame,
                "death_frame": g.death_frame,
            }
            for g in spec.groups
        ],
    }


def load_scene(path) -> SceneSpec:
    """Read a JSON scene file (see README for the schema)."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid scene JSON: {exc}") from exc
    try:
        return scene_from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed scene: {exc!r}") from exc


def save_scene(spec: SceneSpec, path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(spec), indent=2) + "\n", encoding="utf-8")
