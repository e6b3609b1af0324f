"""Scene container: geometry segments plus the bounding square.

A scene is a list of non-crossing line segments normalized so the largest
dimension of the geometry spans [0, 1], wrapped in four boundary segments
forming the unit square. Geometry segments come first so their indices
double as the segment ids reported by ray queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ON_SEGMENT_TOL, Point, Segment, SegmentKind, segments_cross

UNIT_SQUARE_CORNERS = (Point(0.0, 0.0), Point(1.0, 0.0), Point(1.0, 1.0), Point(0.0, 1.0))


def unit_square_boundary() -> list[Segment]:
    c = UNIT_SQUARE_CORNERS
    return [Segment(c[i], c[(i + 1) % 4], SegmentKind.BOUNDARY) for i in range(4)]


class SceneError(ValueError):
    pass


@dataclass
class Scene:
    segments: list[Segment]
    name: str = "scene"
    provenance: str = ""

    @property
    def geometry(self) -> list[Segment]:
        return [s for s in self.segments if s.kind is SegmentKind.GEOMETRY]

    def geometry_ids(self) -> list[int]:
        return [i for i, s in enumerate(self.segments) if s.kind is SegmentKind.GEOMETRY]

    @classmethod
    def from_geometry(cls, geometry: list[Segment], name: str = "scene",
                      provenance: str = "", normalize: bool = True,
                      validate: bool = True) -> "Scene":
        scene = cls(list(geometry) + unit_square_boundary(), name, provenance)
        if normalize:
            scene = normalize_scene(scene)
        if validate:
            scene.validate()
        return scene

    def validate(self) -> None:
        """Raise SceneError when the scene violates its invariants."""
        geo = self.geometry
        for i, s in enumerate(geo):
            for p in (s.a, s.b):
                if not (0.0 <= p.x <= 1.0 and 0.0 <= p.y <= 1.0):
                    raise SceneError(f"segment {i} endpoint {p} outside the unit square")
        bad = crossing_pairs(geo)
        if bad:
            raise SceneError(f"crossing segments: {bad[:8]}" + (" ..." if len(bad) > 8 else ""))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(serialize_scene(self))

    @classmethod
    def load(cls, path: str) -> "Scene":
        with open(path) as fh:
            return parse_scene(fh.read())


def crossing_pairs(segments: list[Segment]) -> list[tuple[int, int]]:
    """Index pairs of segments that cross (bounding-box prefiltered)."""
    n = len(segments)
    if n < 2:
        return []
    ax = np.array([min(s.a.x, s.b.x) for s in segments])
    bx = np.array([max(s.a.x, s.b.x) for s in segments])
    ay = np.array([min(s.a.y, s.b.y) for s in segments])
    by = np.array([max(s.a.y, s.b.y) for s in segments])
    out = []
    for i in range(n - 1):
        j = np.nonzero((ax[i + 1:] <= bx[i] + ON_SEGMENT_TOL) & (bx[i + 1:] >= ax[i] - ON_SEGMENT_TOL)
                       & (ay[i + 1:] <= by[i] + ON_SEGMENT_TOL) & (by[i + 1:] >= ay[i] - ON_SEGMENT_TOL))[0]
        for k in j:
            if segments_cross(segments[i], segments[i + 1 + k]):
                out.append((i, int(i + 1 + k)))
    return out


def normalize_scene(scene: Scene) -> Scene:
    """Scale and translate geometry so its largest dimension spans [0, 1].

    Aspect ratio is preserved; the bounding square is rebuilt. Geometry that
    already touches both 0 and 1 on its largest axis passes through unchanged.
    """
    geo = scene.geometry
    if not geo:
        return Scene(unit_square_boundary(), scene.name, scene.provenance)
    xs = [p.x for s in geo for p in (s.a, s.b)]
    ys = [p.y for s in geo for p in (s.a, s.b)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    extent = max(x1 - x0, y1 - y0)
    if extent <= 0.0:
        raise SceneError("degenerate scene: zero extent")
    if x0 == 0.0 and y0 == 0.0 and extent == 1.0:
        return Scene(geo + unit_square_boundary(), scene.name, scene.provenance)
    scale = 1.0 / extent
    segs = [Segment(Point((s.a.x - x0) * scale, (s.a.y - y0) * scale),
                    Point((s.b.x - x0) * scale, (s.b.y - y0) * scale), s.kind)
            for s in geo]
    return Scene(segs + unit_square_boundary(), scene.name, scene.provenance)


SCENE_HEADER = "mintri-scene v1"


def _fmt(x: float) -> str:
    return format(x, ".17g")


def serialize_scene(scene: Scene) -> str:
    lines = [SCENE_HEADER,
             f"name {scene.name}",
             f"provenance {scene.provenance}",
             f"segments {len(scene.segments)}"]
    for s in scene.segments:
        lines.append(f"{_fmt(s.a.x)} {_fmt(s.a.y)} {_fmt(s.b.x)} {_fmt(s.b.y)} {s.kind.value}")
    return "\n".join(lines) + "\n"


def parse_scene(text: str) -> Scene:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCENE_HEADER:
        raise SceneError(f"not a scene file (expected header {SCENE_HEADER!r})")
    name, provenance, count = "scene", "", None
    idx = 1
    while idx < len(lines):
        line = lines[idx].strip()
        idx += 1
        if line.startswith("name "):
            name = line[5:]
        elif line.startswith("provenance"):
            provenance = line[10:].strip()
        elif line.startswith("segments "):
            count = int(line.split()[1])
            break
        elif line:
            raise SceneError(f"line {idx}: unexpected {line!r}")
    if count is None:
        raise SceneError("missing 'segments' section")
    segs = []
    for k in range(count):
        if idx + k >= len(lines):
            raise SceneError(f"line {idx + k + 1}: expected {count} segments, file ends early")
        parts = lines[idx + k].split()
        if len(parts) != 5:
            raise SceneError(f"line {idx + k + 1}: expected 'x1 y1 x2 y2 kind'")
        x1, y1, x2, y2 = map(float, parts[:4])
        kind = SegmentKind(parts[4])
        segs.append(Segment(Point(x1, y1), Point(x2, y2), kind))
    return Scene(segs, name, provenance)
