"""On-disk formats.

* Annotation / centroid CSV: one ``frame,x,y`` record per point, optional
  ``frame,x,y`` header line.
* CDM1 density maps: ``b"CDM1"``, u32 LE width, u32 LE height, u8 kind
  (0 = crowd, 1 = centroid), then width*height f32 LE cells, row-major, top
  row first.
* Flow reports: JSON lines, one object per frame pair.
"""

from __future__ import annotations

import json
import math
import re
import struct
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

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
)

CDM_MAGIC = b"CDM1"
_CDM_HEADER = struct.Struct("<4sIIB")
CSV_HEADER = "frame,x,y"


class FormatError(ValueError):
    pass


# -- CSV -------------------------------------------------------------------


def _parse_points_csv(path) -> dict[int, list[tuple[int, Point]]]:
    """frame id -> [(line number, point)], in file order."""
    frames: dict[int, list[tuple[int, Point]]] = defaultdict(list)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line.replace(" ", "") == CSV_HEADER:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields 'frame,x,y', got {len(parts)}")
            try:
                frame = int(parts[0])
                x, y = float(parts[1]), float(parts[2])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed record {line!r}") from None
            if frame < 0:
                raise FormatError(f"{path}:{lineno}: negative frame index {frame}")
            if not (math.isfinite(x) and math.isfinite(y)):
                raise FormatError(f"{path}:{lineno}: non-finite coordinate in {line!r}")
            frames[frame].append((lineno, Point(x, y)))
    return frames


def parse_annotations(path, dims: FrameDims | None = None, clip: bool = False) -> list[FrameAnnotations]:
    """Read head annotations grouped by frame, ascending frame id.

    Out-of-frame points raise unless ``clip`` is set, in which case they are
    dropped. Without ``dims`` the frame is taken as 640x512.
    """
    dims = dims or FrameDims(640, 512)
    out = []
    for frame, rows in sorted(_parse_points_csv(path).items()):
        heads = []
        for lineno, p in rows:
            if not dims.contains(p):
                if clip:
                    continue
                raise FormatError(
                    f"{path}:{lineno}: point ({p.x}, {p.y}) outside the {dims.width}x{dims.height} frame"
                )
            heads.append(p)
        out.append(FrameAnnotations(frame, tuple(heads), dims))
    return out


def read_centroids(path) -> list[CentroidSet]:
    return [
        CentroidSet(frame, tuple(p for _, p in rows))
        for frame, rows in sorted(_parse_points_csv(path).items())
    ]


def _write_points_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for frame, p in rows:
            fh.write(f"{frame},{p.x!r},{p.y!r}\n")


def write_annotations(frames, path) -> None:
    _write_points_csv(((f.frame_id, p) for f in frames for p in f.heads), path)


def write_centroids(sets, path) -> None:
    """Centroid CSV in the annotation layout; frames without centroids leave no rows."""
    _write_points_csv(((s.frame_id, p) for s in sets for p in s.centroids), path)


# -- CDM1 ------------------------------------------------------------------


def encode_density_map(dmap: DensityMap) -> bytes:
    header = _CDM_HEADER.pack(CDM_MAGIC, dmap.dims.width, dmap.dims.height, dmap.kind.value)
    return header + dmap.values.astype("<f4").tobytes(order="C")


def decode_density_map(data: bytes, source: str = "<bytes>") -> DensityMap:
    if len(data) < _CDM_HEADER.size:
        raise FormatError(f"{source}: truncated header ({len(data)} bytes)")
    magic, width, height, kind = _CDM_HEADER.unpack_from(data)
    if magic != CDM_MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {CDM_MAGIC!r}")
    try:
        kind = MapKind(kind)
    except ValueError:
        raise FormatError(f"{source}: unknown map kind byte {kind}") from None
    if width < 1 or height < 1:
        raise FormatError(f"{source}: invalid dimensions {width}x{height}")
    expected = width * height * 4
    payload = len(data) - _CDM_HEADER.size
    if payload != expected:
        raise FormatError(
            f"{source}: payload is {payload} bytes, expected {expected} for {width}x{height} cells"
        )
    cells = np.frombuffer(data, dtype="<f4", offset=_CDM_HEADER.size).astype(np.float64)
    return DensityMap(FrameDims(width, height), cells.reshape(height, width), kind)


def write_density_map(dmap: DensityMap, path) -> None:
    Path(path).write_bytes(encode_density_map(dmap))


def read_density_map(path) -> DensityMap:
    return decode_density_map(Path(path).read_bytes(), str(path))


_FRAME_RE = re.compile(r"(\d+)$")


def frame_id_from_path(path, default: int | None = None) -> int:
    """Trailing digits of the file stem, e.g. ``frame_000012.cdm`` -> 12."""
    m = _FRAME_RE.search(Path(path).stem)
    if m:
        return int(m.group(1))
    if default is None:
        raise FormatError(f"{path}: no frame index in file name")
    return default


def map_filename(frame_id: int) -> str:
    return f"frame_{frame_id:06d}.cdm"


def list_map_dir(directory) -> list[tuple[int, Path]]:
    """(frame id, path) for every ``*.cdm`` file, ascending frame id."""
    entries = [(frame_id_from_path(p), p) for p in Path(directory).glob("*.cdm")]
    ids = [i for i, _ in entries]
    if len(set(ids)) != len(ids):
        raise FormatError(f"{directory}: several map files share a frame index")
    return sorted(entries)


# -- flow reports ----------------------------------------------------------


@dataclass(frozen=True)
class FlowReport:
    result: FlowResult
    elapsed_ms: float = 0.0
    metadata: dict = field(default_factory=dict)


def _pt(p: Point) -> list[float]:
    return [p.x, p.y]


def flow_report_to_dict(report: FlowReport) -> dict:
    r = report.result
    return {
        "t0": r.t0_frame,
        "tk": r.tk_frame,
        "matches": [
            {
                "from": _pt(m.start),
                "to": _pt(m.end),
                "displacement": list(m.displacement),
                "distance": m.distance,
                "direction": m.direction.value,
            }
            for m in r.matches
        ],
        "unmatched_start": [_pt(p) for p in r.unmatched_start],
        "unmatched_end": [_pt(p) for p in r.unmatched_end],
        "elapsed_ms": report.elapsed_ms,
        "metadata": report.metadata,
    }


def flow_report_from_dict(d: dict) -> FlowReport:
    matches = tuple(
        FlowMatch(Point(*m["from"]), Point(*m["to"]), Direction(m["direction"])) for m in d["matches"]
    )
    result = FlowResult(
        t0_frame=int(d["t0"]),
        tk_frame=int(d["tk"]),
        matches=matches,
        unmatched_start=tuple(Point(*p) for p in d["unmatched_start"]),
        unmatched_end=tuple(Point(*p) for p in d["unmatched_end"]),
    )
    return FlowReport(result, float(d.get("elapsed_ms", 0.0)), dict(d.get("metadata", {})))


def write_flow_report(reports, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rep in reports:
            fh.write(json.dumps(flow_report_to_dict(rep), separators=(",", ":")) + "\n")


def read_flow_report(path) -> list[FlowReport]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(flow_report_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed flow record: {exc}") from None
    return out


def write_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
