"""Basic 2D primitives for unit-square scenes.

Everything downstream (triangulations, the annealer, the traversal engines)
works in coordinates normalized to the unit square, which is what makes the
fixed absolute tolerances below meaningful.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, NamedTuple, Optional

# |twice signed area| at or below this counts as degenerate (unit-square coords).
ORIENT_EPS = 1e-18
# Critical value kappa: collinearity_quality below this means "near collinear".
COLLINEAR_KAPPA = 1e-4
# A point counts as lying on a segment when its distance is below this.
ON_SEGMENT_TOL = 1e-12


class Orientation(Enum):
    POSITIVE = 1
    DEGENERATE = 0
    NEGATIVE = -1


class Point(NamedTuple):
    x: float
    y: float


class SegmentKind(Enum):
    GEOMETRY = "G"   # real scene geometry; a ray traversal reports a hit
    BOUNDARY = "B"   # side of the bounding square; traversal ends with no hit


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point
    kind: SegmentKind = SegmentKind.GEOMETRY

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError(f"degenerate segment at {self.a}")

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)

    def point_at(self, u: float) -> Point:
        return Point(self.a.x + u * (self.b.x - self.a.x),
                     self.a.y + u * (self.b.y - self.a.y))

    def param_of(self, p: Point) -> float:
        """Parameter of the projection of p onto the segment's support line."""
        ex, ey = self.b.x - self.a.x, self.b.y - self.a.y
        return ((p.x - self.a.x) * ex + (p.y - self.a.y) * ey) / (ex * ex + ey * ey)


@dataclass
class Ray:
    origin: Point
    direction: Point
    start_tri: Optional[int] = None

    def __post_init__(self) -> None:
        dx, dy = self.direction
        n = math.hypot(dx, dy)
        if not math.isfinite(n) or n == 0.0:
            raise ValueError("ray direction must be a nonzero finite vector")
        if abs(n - 1.0) > 1e-12:
            self.direction = Point(dx / n, dy / n)

    @classmethod
    def from_angle(cls, origin: Point, theta: float) -> "Ray":
        return cls(origin, Point(math.cos(theta), math.sin(theta)))


def signed_area2(a: Point, b: Point, c: Point) -> float:
    """Twice the signed area of triangle abc (positive for counterclockwise)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def orient2d(a: Point, b: Point, c: Point) -> Orientation:
    det = signed_area2(a, b, c)
    if det > ORIENT_EPS:
        return Orientation.POSITIVE
    if det < -ORIENT_EPS:
        return Orientation.NEGATIVE
    return Orientation.DEGENERATE


def incircle(a: Point, b: Point, c: Point, d: Point) -> float:
    """Positive when d lies strictly inside the circumcircle of ccw triangle abc."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    return (alift * (bdx * cdy - cdx * bdy)
            + blift * (cdx * ady - adx * cdy)
            + clift * (adx * bdy - bdx * ady))


def collinearity_quality(a: Point, b: Point, c: Point) -> float:
    """Shape quality of triangle abc: area over the area of the square with
    the same perimeter.

    0 for collinear points, maximal (4*sqrt(3)/9) for an equilateral triangle.
    Scale invariant. All-coincident input returns 0 by convention.
    """
    area = abs(signed_area2(a, b, c)) / 2.0
    per = (math.hypot(b[0] - a[0], b[1] - a[1])
           + math.hypot(c[0] - b[0], c[1] - b[1])
           + math.hypot(a[0] - c[0], a[1] - c[1]))
    if per == 0.0:
        return 0.0
    q = per / 4.0
    return area / (q * q)


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ex, ey = b[0] - a[0], b[1] - a[1]
    px, py = p[0] - a[0], p[1] - a[1]
    denom = ex * ex + ey * ey
    if denom == 0.0:
        return math.hypot(px, py)
    u = (px * ex + py * ey) / denom
    u = 0.0 if u < 0.0 else (1.0 if u > 1.0 else u)
    return math.hypot(px - u * ex, py - u * ey)


def ray_segment_intersect(ray: Ray, seg: Segment) -> Optional[tuple[float, float]]:
    """Intersection of a ray with a segment.

    Returns (t, u) with t >= 0 the ray parameter and u in [0, 1] the segment
    parameter, or None when there is no forward intersection. For a collinear
    overlap the nearest endpoint with t >= 0 is reported.
    """
    ox, oy = ray.origin
    dx, dy = ray.direction
    ax, ay = seg.a
    ex, ey = seg.b[0] - ax, seg.b[1] - ay
    denom = dx * ey - dy * ex
    wx, wy = ax - ox, ay - oy
    if denom == 0.0:
        # Parallel. Overlap only when the segment start lies on the ray line.
        if wx * dy - wy * dx != 0.0:
            return None
        ta = wx * dx + wy * dy
        tb = (seg.b[0] - ox) * dx + (seg.b[1] - oy) * dy
        if ta < 0.0 and tb < 0.0:
            return None
        if ta < 0.0:
            return (tb, 1.0)
        if tb < 0.0:
            return (ta, 0.0)
        return (ta, 0.0) if ta <= tb else (tb, 1.0)
    t = (wx * ey - wy * ex) / denom
    u = (wx * dy - wy * dx) / denom
    if t < 0.0 or u < 0.0 or u > 1.0:
        return None
    return (t, u)


def segments_cross(s: Segment, t: Segment, *, allow_shared_endpoints: bool = True) -> bool:
    """True when the two segments intersect in a way a scene must not contain.

    Shared endpoints are tolerated when allow_shared_endpoints is set; any
    other contact (proper crossing, endpoint interior to the other segment,
    collinear overlap) counts as a crossing.
    """
    shared = {s.a, s.b} & {t.a, t.b}
    if shared:
        if not allow_shared_endpoints:
            return True
        if len(shared) == 2:
            return True  # duplicate segment
        # Sharing one endpoint is fine unless the other ends still touch.
        (p,) = shared
        sa = s.b if s.a == p else s.a
        ta = t.b if t.a == p else t.a
        return (point_segment_distance(sa, t.a, t.b) <= ON_SEGMENT_TOL
                or point_segment_distance(ta, s.a, s.b) <= ON_SEGMENT_TOL)
    d1 = signed_area2(t.a, t.b, s.a)
    d2 = signed_area2(t.a, t.b, s.b)
    d3 = signed_area2(s.a, s.b, t.a)
    d4 = signed_area2(s.a, s.b, t.b)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    # Touching contacts (T junctions, endpoint-on-segment, collinear overlap).
    return (point_segment_distance(s.a, t.a, t.b) <= ON_SEGMENT_TOL
            or point_segment_distance(s.b, t.a, t.b) <= ON_SEGMENT_TOL
            or point_segment_distance(t.a, s.a, s.b) <= ON_SEGMENT_TOL
            or point_segment_distance(t.b, s.a, s.b) <= ON_SEGMENT_TOL)


class UniformGrid:
    """Uniform bucket grid over 2D points for disk range queries.

    Single writer; ids are caller-managed integers. The grid stores the
    coordinates it was given so that membership stays consistent under
    move/insert/remove regardless of what the caller does with its own copy.
    """

    def __init__(self, cell_size: float):
        if not (cell_size > 0.0):
            raise ValueError("cell_size must be positive")
        self.cell_size = cell_size
        self._cells: dict[tuple[int, int], set[int]] = {}
        self._pos: dict[int, tuple[float, float]] = {}

    def __len__(self) -> int:
        return len(self._pos)

    def _key(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.cell_size), math.floor(y / self.cell_size))

    def insert(self, vid: int, x: float, y: float) -> None:
        if vid in self._pos:
            raise KeyError(f"vertex {vid} already stored")
        self._pos[vid] = (x, y)
        self._cells.setdefault(self._key(x, y), set()).add(vid)

    def remove(self, vid: int) -> None:
        x, y = self._pos.pop(vid)
        key = self._key(x, y)
        bucket = self._cells[key]
        bucket.discard(vid)
        if not bucket:
            del self._cells[key]

    def move(self, vid: int, x: float, y: float) -> None:
        ox, oy = self._pos[vid]
        old = self._key(ox, oy)
        new = self._key(x, y)
        self._pos[vid] = (x, y)
        if old != new:
            bucket = self._cells[old]
            bucket.discard(vid)
            if not bucket:
                del self._cells[old]
            self._cells.setdefault(new, set()).add(vid)

    def query_disk(self, cx: float, cy: float, radius: float) -> list[int]:
        """All stored ids within Euclidean distance <= radius of (cx, cy)."""
        cs = self.cell_size
        i0 = math.floor((cx - radius) / cs)
        i1 = math.floor((cx + radius) / cs)
        j0 = math.floor((cy - radius) / cs)
        j1 = math.floor((cy + radius) / cs)
        out: list[int] = []
        pos = self._pos
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                bucket = self._cells.get((i, j))
                if not bucket:
                    continue
                for vid in bucket:
                    x, y = pos[vid]
                    if math.hypot(x - cx, y - cy) <= radius:
                        out.append(vid)
        return out

    def items(self) -> Iterator[tuple[int, tuple[float, float]]]:
        return iter(self._pos.items())
