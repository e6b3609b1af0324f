"""SVG ingestion (paths flattened to segments) and SVG rendering of scenes,
triangulations, and acceleration structures."""
from __future__ import annotations

import math
import re
import warnings
import xml.etree.ElementTree as ET
from typing import Iterable, Optional

from .geometry import Point, Ray, Segment, SegmentKind
from .scene import Scene, SceneError, crossing_pairs, normalize_scene, unit_square_boundary

_NUM = re.compile(r"[-+]?(?:\d*\.\d+|\d+\.?)(?:[eE][-+]?\d+)?")
_CMD = re.compile(r"[MmLlHhVvCcQqZzSsTtAa]")


class SvgError(SceneError):
    pass


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _tokenize_path(d: str):
    pos = 0
    while pos < len(d):
        ch = d[pos]
        if _CMD.fullmatch(ch):
            yield ch
            pos += 1
        elif ch in " ,\t\n\r":
            pos += 1
        else:
            m = _NUM.match(d, pos)
            if not m:
                raise SvgError(f"bad path data near {d[pos:pos + 12]!r}")
            yield float(m.group())
            pos = m.end()


def _flatten_cubic(p0, p1, p2, p3, tol: float, out: list, depth: int = 0) -> None:
    # Flat when every control point sits within tol of the chord.
    def dist(p, a, b):
        ex, ey = b[0] - a[0], b[1] - a[1]
        n = math.hypot(ex, ey)
        if n == 0.0:
            return math.hypot(p[0] - a[0], p[1] - a[1])
        return abs((p[0] - a[0]) * ey - (p[1] - a[1]) * ex) / n

    if depth >= 24 or max(dist(p1, p0, p3), dist(p2, p0, p3)) < tol:
        out.append(p3)
        return
    mid = lambda a, b: ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
    p01, p12, p23 = mid(p0, p1), mid(p1, p2), mid(p2, p3)
    p012, p123 = mid(p01, p12), mid(p12, p23)
    c = mid(p012, p123)
    _flatten_cubic(p0, p01, p012, c, tol, out, depth + 1)
    _flatten_cubic(c, p123, p23, p3, tol, out, depth + 1)


def _flatten_quad(p0, p1, p2, tol: float, out: list) -> None:
    c1 = (p0[0] + 2.0 * (p1[0] - p0[0]) / 3.0, p0[1] + 2.0 * (p1[1] - p0[1]) / 3.0)
    c2 = (p2[0] + 2.0 * (p1[0] - p2[0]) / 3.0, p2[1] + 2.0 * (p1[1] - p2[1]) / 3.0)
    _flatten_cubic(p0, c1, c2, p2, tol, out)


def _path_polylines(d: str, tol: float) -> list[list[tuple[float, float]]]:
    polys: list[list[tuple[float, float]]] = []
    cur: list[tuple[float, float]] = []
    tokens = list(_tokenize_path(d))
    i = 0
    cmd = None
    start = (0.0, 0.0)
    pos = (0.0, 0.0)
    prev_ctrl = None

    def take(n: int):
        nonlocal i
        vals = tokens[i:i + n]
        if len(vals) < n or any(isinstance(v, str) for v in vals):
            raise SvgError(f"path command {cmd!r} missing coordinates")
        i += n
        return vals

    while i < len(tokens):
        tok = tokens[i]
        if isinstance(tok, str):
            cmd = tok
            i += 1
            if cmd in "Zz":
                if cur and cur[0] != cur[-1]:
                    cur.append(start)
                if len(cur) > 1:
                    polys.append(cur)
                cur = []
                pos = start
                prev_ctrl = None
                continue
        if cmd is None:
            raise SvgError("path data does not start with a command")
        rel = cmd.islower()
        c = cmd.upper()
        if c == "M":
            x, y = take(2)
            pos = (pos[0] + x, pos[1] + y) if rel else (x, y)
            if len(cur) > 1:
                polys.append(cur)
            cur = [pos]
            start = pos
            cmd = "l" if rel else "L"
            prev_ctrl = None
        elif c == "L":
            x, y = take(2)
            pos = (pos[0] + x, pos[1] + y) if rel else (x, y)
            cur.append(pos)
            prev_ctrl = None
        elif c == "H":
            (x,) = take(1)
            pos = (pos[0] + x if rel else x, pos[1])
            cur.append(pos)
            prev_ctrl = None
        elif c == "V":
            (y,) = take(1)
            pos = (pos[0], pos[1] + y if rel else y)
            cur.append(pos)
            prev_ctrl = None
        elif c in ("C", "S"):
            if c == "C":
                x1, y1, x2, y2, x, y = take(6)
            else:
                x2, y2, x, y = take(4)
                if prev_ctrl is not None:
                    x1, y1 = 2 * pos[0] - prev_ctrl[0], 2 * pos[1] - prev_ctrl[1]
                else:
                    x1, y1 = pos
                if rel:
                    x1, y1 = x1 - pos[0], y1 - pos[1]
            if rel:
                x1, y1 = pos[0] + x1, pos[1] + y1
                x2, y2 = pos[0] + x2, pos[1] + y2
                x, y = pos[0] + x, pos[1] + y
            pts: list = []
            _flatten_cubic(pos, (x1, y1), (x2, y2), (x, y), tol, pts)
            cur.extend(pts)
            prev_ctrl = (x2, y2)
            pos = (x, y)
        elif c == "Q":
            x1, y1, x, y = take(4)
            if rel:
                x1, y1 = pos[0] + x1, pos[1] + y1
                x, y = pos[0] + x, pos[1] + y
            pts = []
            _flatten_quad(pos, (x1, y1), (x, y), tol, pts)
            cur.extend(pts)
            prev_ctrl = (x1, y1)
            pos = (x, y)
        else:
            warnings.warn(f"unsupported path command {cmd!r}; skipping rest of path")
            break
    if len(cur) > 1:
        polys.append(cur)
    return polys


def import_svg(path: str, flatten_tolerance: float = 1e-3,
               merge_tolerance: float = 1e-6) -> Scene:
    """Read line/polyline/polygon/path elements into a normalized scene.

    Bezier curves are flattened until the control polygon sits within
    flatten_tolerance of each chord; endpoints within merge_tolerance snap to
    one vertex. Crossing segments after merging are an error (the pairs are
    listed); unsupported elements produce a warning and are skipped.
    """
    tree = ET.parse(path)
    polys: list[list[tuple[float, float]]] = []
    for el in tree.iter():
        tag = _strip_ns(el.tag)
        if tag == "line":
            polys.append([(float(el.get("x1", 0)), float(el.get("y1", 0))),
                          (float(el.get("x2", 0)), float(el.get("y2", 0)))])
        elif tag in ("polyline", "polygon"):
            nums = [float(v) for v in _NUM.findall(el.get("points", ""))]
            pts = list(zip(nums[0::2], nums[1::2]))
            if tag == "polygon" and len(pts) > 2:
                pts.append(pts[0])
            if len(pts) > 1:
                polys.append(pts)
        elif tag == "path":
            polys.extend(_path_polylines(el.get("d", ""), flatten_tolerance))
        elif tag in ("rect", "circle", "ellipse", "text", "image", "use"):
            warnings.warn(f"unsupported svg element <{tag}>; skipped")
    if not polys:
        raise SvgError(f"{path}: no usable geometry found")

    # Flip y (svg grows downward), then merge nearly identical endpoints.
    pts = [(x, -y) for poly in polys for (x, y) in poly]
    snap: dict[tuple[int, int], list[tuple[float, float]]] = {}
    canon: dict[tuple[float, float], tuple[float, float]] = {}
    inv = 1.0 / merge_tolerance

    def snap_point(p: tuple[float, float]) -> tuple[float, float]:
        if p in canon:
            return canon[p]
        cell = (math.floor(p[0] * inv), math.floor(p[1] * inv))
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for q in snap.get((cell[0] + di, cell[1] + dj), ()):
                    if math.hypot(p[0] - q[0], p[1] - q[1]) <= merge_tolerance:
                        canon[p] = q
                        return q
        snap.setdefault(cell, []).append(p)
        canon[p] = p
        return p

    segs: list[Segment] = []
    seen: set[frozenset] = set()
    for poly in polys:
        mapped = [snap_point((x, -y)) for (x, y) in poly]
        for a, b in zip(mapped, mapped[1:]):
            if a == b:
                continue
            key = frozenset((a, b))
            if key in seen:
                continue
            seen.add(key)
            segs.append(Segment(Point(*a), Point(*b)))
    bad = crossing_pairs(segs)
    if bad:
        locs = []
        for i, j in bad[:6]:
            locs.append(f"({i},{j}) near {segs[i].a}")
        raise SvgError(f"{path}: crossing segments after merge: {'; '.join(locs)}")
    scene = Scene.from_geometry(segs, name=path.rsplit("/", 1)[-1],
                                provenance=f"import_svg({path!r}, "
                                           f"flatten_tolerance={flatten_tolerance!r}, "
                                           f"merge_tolerance={merge_tolerance!r})",
                                normalize=True, validate=True)
    return scene


# ----------------------------------------------------------------------
# rendering

def _f(x: float) -> str:
    return f"{x:.4f}"


def render_svg(scene: Scene, triangulation=None, bvh=None, kd=None,
               rays: Optional[Iterable[Ray]] = None, size: int = 800) -> str:
    """Deterministic SVG: geometry in black, the acceleration structure in
    blue, sampled rays in red."""
    from .accel import SceneIndex, brute_force_closest

    def sx(x: float) -> str:
        return _f(x * size)

    def sy(y: float) -> str:
        return _f((1.0 - y) * size)

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">']
    lines.append(f'<rect x="0" y="0" width="{size}" height="{size}" '
                 f'fill="white" stroke="black" stroke-width="1"/>')
    blue = []
    if triangulation is not None:
        for t, i, a, b in triangulation.iter_edges():
            pa, pb = triangulation.pos(a), triangulation.pos(b)
            blue.append(f'<line x1="{sx(pa.x)}" y1="{sy(pa.y)}" x2="{sx(pb.x)}" '
                        f'y2="{sy(pb.y)}" stroke="blue" stroke-width="0.6"/>')
    if bvh is not None:
        for leaf in bvh.leaves():
            x0, y0, x1, y1 = leaf.box
            blue.append(f'<rect x="{sx(x0)}" y="{sy(y1)}" width="{_f((x1 - x0) * size)}" '
                        f'height="{_f((y1 - y0) * size)}" fill="none" stroke="blue" '
                        f'stroke-width="0.6"/>')
    if kd is not None:
        for leaf in kd._leaves:
            x0, y0, x1, y1 = leaf.box
            blue.append(f'<rect x="{sx(x0)}" y="{sy(y1)}" width="{_f((x1 - x0) * size)}" '
                        f'height="{_f((y1 - y0) * size)}" fill="none" stroke="blue" '
                        f'stroke-width="0.6"/>')
    lines.extend(blue)
    for seg in scene.segments:
        if seg.kind is SegmentKind.GEOMETRY:
            lines.append(f'<line x1="{sx(seg.a.x)}" y1="{sy(seg.a.y)}" '
                         f'x2="{sx(seg.b.x)}" y2="{sy(seg.b.y)}" '
                         f'stroke="black" stroke-width="1.4"/>')
    if rays:
        index = SceneIndex(scene)
        for ray in rays:
            hit = brute_force_closest(scene, ray, index)
            if hit is not None:
                end = hit.point
            else:
                t = _exit_t(ray)
                end = Point(ray.origin.x + t * ray.direction.x,
                            ray.origin.y + t * ray.direction.y)
            lines.append(f'<line x1="{sx(ray.origin.x)}" y1="{sy(ray.origin.y)}" '
                         f'x2="{sx(end.x)}" y2="{sy(end.y)}" '
                         f'stroke="red" stroke-width="0.8"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _exit_t(ray: Ray) -> float:
    t = math.inf
    o, d = ray.origin, ray.direction
    for oc, dc in ((o.x, d.x), (o.y, d.y)):
        if dc > 0.0:
            t = min(t, (1.0 - oc) / dc)
        elif dc < 0.0:
            t = min(t, (0.0 - oc) / dc)
    return 0.0 if not math.isfinite(t) else max(t, 0.0)
