"""Ray-query engines with exact operation counting.

Three engines answer closest-hit queries against a scene's geometry
segments, each counting its own traversal operations:

  * stackless triangulation traversal (cell steps only),
  * an SAH-built BVH (node tests + primitive tests),
  * a roped kd-tree with idealized rope selection and mailboxing
    (nodes visited + rope steps + unique primitive tests),

plus a brute-force linear-scan oracle. All engines resolve co-located hits at
shared segment endpoints to the lowest segment id so their answers compare
exactly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .geometry import Point, Ray, Segment, SegmentKind, ray_segment_intersect, signed_area2
from .scene import Scene
from .trimesh import INTERNAL, Triangulation

C_T_GRID = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


class TraversalError(RuntimeError):
    pass


@dataclass
class Hit:
    seg: int
    t: float
    point: Point


@dataclass
class TraversalStats:
    tri_steps: int = 0
    bvh_node_tests: int = 0
    bvh_prim_tests: int = 0
    kd_nodes_visited: int = 0
    kd_rope_steps: int = 0
    kd_prim_tests: int = 0

    def total(self) -> int:
        return (self.tri_steps + self.bvh_node_tests + self.bvh_prim_tests
                + self.kd_nodes_visited + self.kd_rope_steps + self.kd_prim_tests)

    def add(self, other: "TraversalStats") -> None:
        self.tri_steps += other.tri_steps
        self.bvh_node_tests += other.bvh_node_tests
        self.bvh_prim_tests += other.bvh_prim_tests
        self.kd_nodes_visited += other.kd_nodes_visited
        self.kd_rope_steps += other.kd_rope_steps
        self.kd_prim_tests += other.kd_prim_tests


class SceneIndex:
    """Vectorized geometry arrays plus a shared-endpoint lookup for a scene."""

    def __init__(self, scene: Scene):
        self.scene = scene
        geo = [(i, s) for i, s in enumerate(scene.segments)
               if s.kind is SegmentKind.GEOMETRY]
        self.ids = [i for i, _ in geo]
        n = len(geo)
        self.ax = np.array([s.a.x for _, s in geo]) if n else np.zeros(0)
        self.ay = np.array([s.a.y for _, s in geo]) if n else np.zeros(0)
        self.ex = np.array([s.b.x - s.a.x for _, s in geo]) if n else np.zeros(0)
        self.ey = np.array([s.b.y - s.a.y for _, s in geo]) if n else np.zeros(0)
        self.endpoint_map: dict[tuple[float, float], list[int]] = {}
        for i, s in geo:
            for p in (s.a, s.b):
                self.endpoint_map.setdefault((p.x, p.y), []).append(i)

    def canonical(self, ray: Ray, sid: int, t: float, u: float) -> Hit:
        """Resolve endpoint-coincident hits to the lowest segment id."""
        seg = self.scene.segments[sid]
        best_sid, best_t, best_u = sid, t, u
        if u <= 1e-9 or u >= 1.0 - 1e-9:
            p = seg.a if u <= 1e-9 else seg.b
            for sid2 in self.endpoint_map.get((p.x, p.y), ()):
                if sid2 >= best_sid:
                    continue
                res = ray_segment_intersect(ray, self.scene.segments[sid2])
                if res is None:
                    continue
                t2, u2 = res
                if abs(t2 - t) <= 1e-9 * max(1.0, abs(t)):
                    best_sid, best_t, best_u = sid2, t2, u2
        pt = self.scene.segments[best_sid].point_at(best_u)
        return Hit(best_sid, best_t, pt)


def brute_force_closest(scene: Scene, ray: Ray,
                        index: Optional[SceneIndex] = None) -> Optional[Hit]:
    """Linear scan over all geometry segments; minimum-t hit, ties to the
    lowest segment id."""
    if index is None:
        index = SceneIndex(scene)
    n = len(index.ids)
    if n == 0:
        return None
    ox, oy = ray.origin
    dx, dy = ray.direction
    wx = index.ax - ox
    wy = index.ay - oy
    denom = dx * index.ey - dy * index.ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (wx * index.ey - wy * index.ex) / denom
        u = (wx * dy - wy * dx) / denom
    valid = (denom != 0.0) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    # Collinear overlaps are not produced by the vectorized path; fall back.
    par = (denom == 0.0) & (wx * dy - wy * dx == 0.0)
    best: Optional[tuple[float, int, float]] = None
    if valid.any():
        k = int(np.nonzero(valid)[0][np.argmin(t[valid])])
        best = (float(t[k]), index.ids[k], float(u[k]))
    if par.any():
        for k in np.nonzero(par)[0]:
            res = ray_segment_intersect(ray, scene.segments[index.ids[int(k)]])
            if res is not None and (best is None or res[0] < best[0]):
                best = (res[0], index.ids[int(k)], res[1])
    if best is None:
        return None
    return index.canonical(ray, best[1], best[0], best[2])


# ----------------------------------------------------------------------
# triangulation traversal

def traverse_triangulation(tri: Triangulation, ray: Ray, start_tri: int,
                           index: Optional[SceneIndex] = None
                           ) -> tuple[Optional[Hit], TraversalStats]:
    """Walk triangles in pierce order from the triangle holding the origin.

    Stops with a hit at the first geometry-constrained edge crossed, with no
    hit at a boundary edge. Each triangle entered counts one step.
    """
    if index is None:
        index = SceneIndex(tri.scene)
    stats = TraversalStats()
    ox, oy = ray.origin
    dx, dy = ray.direction
    scache: dict[int, float] = {}

    def side(vid: int) -> float:
        s = scache.get(vid)
        if s is None:
            v = tri.verts[vid]
            s = dx * (v.y - oy) - dy * (v.x - ox)
            scache[vid] = s
        return s

    cur = start_tri
    entry: Optional[frozenset[int]] = None
    seen: set[tuple[int, Optional[frozenset[int]]]] = set()
    while True:
        key = (cur, entry)
        if key in seen:
            raise TraversalError(f"traversal loop at triangle {cur}")
        seen.add(key)
        stats.tri_steps += 1
        t = tri.tris[cur]
        best_i = None
        best_trans = 0.0
        fallback_i = None
        fallback_trans = 0.0
        for i in range(3):
            p = t.v[(i + 1) % 3]
            q = t.v[(i + 2) % 3]
            if entry is not None and frozenset((p, q)) == entry:
                continue
            sp, sq = side(p), side(q)
            trans = sq - sp
            if trans > fallback_trans:
                fallback_trans = trans
                fallback_i = i
            if sp <= 0.0 <= sq and trans > best_trans:
                best_trans = trans
                best_i = i
        if best_i is None:
            best_i = fallback_i
        if best_i is None:
            raise TraversalError(f"no exit edge from triangle {cur}")
        flag = t.flag[best_i]
        a, b = t.v[(best_i + 1) % 3], t.v[(best_i + 2) % 3]
        if flag != INTERNAL:
            seg = tri.scene.segments[flag]
            if seg.kind is SegmentKind.BOUNDARY:
                return None, stats
            res = ray_segment_intersect(ray, seg)
            if res is None:
                # Grazing numerical corner: take the edge crossing point.
                sp, sq = side(a), side(b)
                w = sp / (sp - sq) if sp != sq else 0.5
                pa, pb = tri.pos(a), tri.pos(b)
                x = pa.x + w * (pb.x - pa.x)
                y = pa.y + w * (pb.y - pa.y)
                tval = (x - ox) * dx + (y - oy) * dy
                return index.canonical(ray, flag, tval, seg.param_of(Point(x, y))), stats
            return index.canonical(ray, flag, res[0], res[1]), stats
        nxt = t.nbr[best_i]
        if nxt is None:
            return None, stats
        entry = frozenset((a, b))
        cur = nxt


# ----------------------------------------------------------------------
# starting-triangle location

def _contains(tri: Triangulation, tid: int, p: Point, tol: float = 1e-15) -> bool:
    t = tri.tris[tid]
    pts = [tri.pos(v) for v in t.v]
    return all(signed_area2(pts[(i + 1) % 3], pts[(i + 2) % 3], p) >= -tol
               for i in range(3))


def _resolve_tie(tri: Triangulation, tid: int, p: Point) -> int:
    """Lowest triangle id among all triangles containing p (flood from tid)."""
    seen = {tid}
    queue = [tid]
    best = tid
    while queue:
        cur = queue.pop()
        best = min(best, cur)
        for n in tri.tris[cur].nbr:
            if n is not None and n not in seen and _contains(tri, n, p):
                seen.add(n)
                queue.append(n)
    return best


def locate_brute_force(tri: Triangulation, p: Point) -> int:
    for tid in tri.alive_tris():
        if _contains(tri, tid, p):
            return tid
    warnings.warn(f"point {p} outside all triangles; using nearest")
    return min(tri.alive_tris(), key=lambda tid: _centroid_dist(tri, tid, p))


def _centroid_dist(tri: Triangulation, tid: int, p: Point) -> float:
    v = tri.tris[tid].v
    cx = sum(tri.pos(k).x for k in v) / 3.0
    cy = sum(tri.pos(k).y for k in v) / 3.0
    return math.hypot(cx - p.x, cy - p.y)


class TriLocator:
    """Coarse anchor grid over the triangulation for fast point location.

    Each grid cell caches its center point's triangle; queries walk from the
    nearest anchor toward the target with the traversal stepping rule.
    """

    def __init__(self, tri: Triangulation, resolution: Optional[int] = None):
        self.tri = tri
        if resolution is None:
            resolution = max(2, int(math.sqrt(max(tri.num_tris, 4) / 2.0)))
        self.res = resolution
        self._anchor: dict[tuple[int, int], tuple[Point, int]] = {}
        self._hint: Optional[int] = None

    def _anchor_for(self, p: Point) -> tuple[Point, int]:
        res = self.res
        cell = (min(res - 1, max(0, int(p.x * res))),
                min(res - 1, max(0, int(p.y * res))))
        got = self._anchor.get(cell)
        if got is None:
            center = Point((cell[0] + 0.5) / res, (cell[1] + 0.5) / res)
            tid, _, _ = self.tri.locate(center, hint=self._hint)
            self._hint = tid
            got = (center, tid)
            self._anchor[cell] = got
        return got

    def locate(self, p: Point) -> int:
        anchor, tid = self._anchor_for(p)
        cur = self._walk(anchor, tid, p)
        if cur is None or not _contains(self.tri, cur, p):
            cur = locate_brute_force(self.tri, p)
        return _resolve_tie(self.tri, cur, p)

    def _walk(self, src: Point, tid: int, target: Point) -> Optional[int]:
        tri = self.tri
        dx, dy = target.x - src.x, target.y - src.y
        norm = math.hypot(dx, dy)
        if norm == 0.0:
            return tid
        dx, dy = dx / norm, dy / norm
        scache: dict[int, float] = {}

        def side(vid: int) -> float:
            s = scache.get(vid)
            if s is None:
                v = tri.verts[vid]
                s = dx * (v.y - src.y) - dy * (v.x - src.x)
                scache[vid] = s
            return s

        cur = tid
        entry = None
        for _ in range(4 * len(tri.tris) + 16):
            if _contains(tri, cur, target):
                return cur
            t = tri.tris[cur]
            best_i, best_trans = None, 0.0
            for i in range(3):
                p, q = t.v[(i + 1) % 3], t.v[(i + 2) % 3]
                if entry is not None and frozenset((p, q)) == entry:
                    continue
                sp, sq = side(p), side(q)
                if sp <= 0.0 <= sq and sq - sp > best_trans:
                    best_trans = sq - sp
                    best_i = i
            if best_i is None:
                return None
            nxt = t.nbr[best_i]
            if nxt is None:
                return None
            entry = frozenset(tri.edge_verts(cur, best_i))
            cur = nxt
        return None


def locate_triangle(tri: Triangulation, p: Point, method: str = "anchor",
                    locator: Optional[TriLocator] = None) -> int:
    """Triangle containing p; edge/vertex ties resolve to the lowest id.

    method "brute" scans all triangles; "anchor" walks from a cached anchor
    grid (pass a TriLocator to reuse its cache across queries).
    """
    if method == "brute":
        tid = None
        for cand in tri.alive_tris():
            if _contains(tri, cand, p):
                tid = cand
                break
        if tid is None:
            return locate_brute_force(tri, p)
        return _resolve_tie(tri, tid, p)
    if method == "anchor":
        if locator is None:
            locator = TriLocator(tri)
        return locator.locate(p)
    raise ValueError(f"unknown location method {method!r}")


# ----------------------------------------------------------------------
# BVH

class BvhNode:
    __slots__ = ("box", "left", "right", "prims")

    def __init__(self, box, left=None, right=None, prims=None):
        self.box = box          # (x0, y0, x1, y1)
        self.left = left
        self.right = right
        self.prims = prims      # segment id list for leaves

    @property
    def is_leaf(self) -> bool:
        return self.prims is not None


class Bvh:
    """SAH-built bounding volume hierarchy over scene geometry segments."""

    def __init__(self, scene: Scene, c_t: float = 1.0):
        self.scene = scene
        self.c_t = c_t
        self.index = SceneIndex(scene)
        ids = self.index.ids
        if not ids:
            raise ValueError("scene has no geometry segments")
        segs = [scene.segments[i] for i in ids]
        x0 = np.array([min(s.a.x, s.b.x) for s in segs])
        x1 = np.array([max(s.a.x, s.b.x) for s in segs])
        y0 = np.array([min(s.a.y, s.b.y) for s in segs])
        y1 = np.array([max(s.a.y, s.b.y) for s in segs])
        self._boxes = (x0, y0, x1, y1)
        self._cx = (x0 + x1) / 2.0
        self._cy = (y0 + y1) / 2.0
        self.root = self._build(np.arange(len(ids)))

    def _build(self, sel: np.ndarray) -> BvhNode:
        x0, y0, x1, y1 = self._boxes
        box = (float(x0[sel].min()), float(y0[sel].min()),
               float(x1[sel].max()), float(y1[sel].max()))
        n = len(sel)
        if n == 1:
            return BvhNode(box, prims=[self.index.ids[int(sel[0])]])
        parent_half_per = (box[2] - box[0]) + (box[3] - box[1])
        if parent_half_per <= 0.0:
            parent_half_per = 1e-30
        best = None  # (cost, axis, k, order)
        for axis, cent in ((0, self._cx), (1, self._cy)):
            order = sel[np.argsort(cent[sel], kind="stable")]
            lx0 = np.minimum.accumulate(x0[order])
            ly0 = np.minimum.accumulate(y0[order])
            lx1 = np.maximum.accumulate(x1[order])
            ly1 = np.maximum.accumulate(y1[order])
            rx0 = np.minimum.accumulate(x0[order][::-1])[::-1]
            ry0 = np.minimum.accumulate(y0[order][::-1])[::-1]
            rx1 = np.maximum.accumulate(x1[order][::-1])[::-1]
            ry1 = np.maximum.accumulate(y1[order][::-1])[::-1]
            pl = (lx1 - lx0) + (ly1 - ly0)          # half perimeters, prefix
            pr = (rx1 - rx0) + (ry1 - ry0)
            ks = np.arange(1, n)
            cost = (self.c_t + (pl[:-1] / parent_half_per) * ks
                    + (pr[1:] / parent_half_per) * (n - ks))
            k = int(np.argmin(cost))
            c = float(cost[k])
            if best is None or c < best[0]:
                best = (c, axis, k + 1, order)
        if best[0] >= n:
            return BvhNode(box, prims=[self.index.ids[int(i)] for i in sel])
        _, _, k, order = best
        return BvhNode(box, left=self._build(order[:k]), right=self._build(order[k:]))

    def intersect(self, ray: Ray) -> tuple[Optional[Hit], TraversalStats]:
        return bvh_intersect(self, ray)

    def leaves(self) -> list[BvhNode]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend((node.left, node.right))
        return out

    def dump(self) -> str:
        lines = []

        def rec(node: BvhNode, depth: int) -> None:
            pad = "  " * depth
            b = node.box
            if node.is_leaf:
                lines.append(f"{pad}leaf box=({b[0]:.6g},{b[1]:.6g},{b[2]:.6g},{b[3]:.6g}) "
                             f"prims={node.prims}")
            else:
                lines.append(f"{pad}node box=({b[0]:.6g},{b[1]:.6g},{b[2]:.6g},{b[3]:.6g})")
                rec(node.left, depth + 1)
                rec(node.right, depth + 1)

        rec(self.root, 0)
        return "\n".join(lines) + "\n"


def _ray_box(ray: Ray, box) -> Optional[tuple[float, float]]:
    """(t_near, t_far) of a ray against an AABB, or None when missed."""
    tmin, tmax = 0.0, math.inf
    for o, d, lo, hi in ((ray.origin.x, ray.direction.x, box[0], box[2]),
                         (ray.origin.y, ray.direction.y, box[1], box[3])):
        if d == 0.0:
            if o < lo or o > hi:
                return None
            continue
        t1, t2 = (lo - o) / d, (hi - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        tmin, tmax = max(tmin, t1), min(tmax, t2)
        if tmin > tmax:
            return None
    return tmin, tmax


def build_bvh(scene: Scene, c_t: float = 1.0) -> Bvh:
    return Bvh(scene, c_t)


def bvh_intersect(bvh: Bvh, ray: Ray) -> tuple[Optional[Hit], TraversalStats]:
    """Ordered descent with near-child-first recursion and t-pruning. Every
    AABB test and every primitive test is counted."""
    stats = TraversalStats()
    best: Optional[tuple[float, int, float]] = None

    stats.bvh_node_tests += 1
    span = _ray_box(ray, bvh.root.box)
    if span is None:
        return None, stats
    stack: list[tuple[float, BvhNode]] = [(span[0], bvh.root)]
    scene = bvh.scene
    while stack:
        tnear, node = stack.pop()
        if best is not None and tnear > best[0] + 1e-12:
            continue
        if node.is_leaf:
            for sid in node.prims:
                stats.bvh_prim_tests += 1
                res = ray_segment_intersect(ray, scene.segments[sid])
                if res is None:
                    continue
                t, u = res
                if best is None or t < best[0]:
                    best = (t, sid, u)
            continue
        children = []
        for child in (node.left, node.right):
            stats.bvh_node_tests += 1
            s = _ray_box(ray, child.box)
            if s is not None and (best is None or s[0] <= best[0] + 1e-12):
                children.append((s[0], child))
        children.sort(key=lambda c: c[0], reverse=True)  # nearer popped first
        stack.extend(children)
    if best is None:
        return None, stats
    return bvh.index.canonical(ray, best[1], best[0], best[2]), stats


# ----------------------------------------------------------------------
# roped kd-tree

class KdNode:
    __slots__ = ("box", "axis", "pos", "left", "right", "prims", "ropes",
                 "rope_counts")

    def __init__(self, box, axis=-1, pos=0.0, left=None, right=None, prims=None):
        self.box = box
        self.axis = axis
        self.pos = pos
        self.left = left
        self.right = right
        self.prims = prims
        self.ropes = None        # [xmin, xmax, ymin, ymax] -> KdNode or None
        self.rope_counts = None  # adjacent-leaf counts per side

    @property
    def is_leaf(self) -> bool:
        return self.prims is not None


def _clip_segment(seg: Segment, box) -> Optional[tuple[float, float]]:
    """Parameter range of the segment inside the box (closed), or None."""
    t0, t1 = 0.0, 1.0
    p, d = seg.a, (seg.b.x - seg.a.x, seg.b.y - seg.a.y)
    for o, dd, lo, hi in ((p.x, d[0], box[0], box[2]), (p.y, d[1], box[1], box[3])):
        if dd == 0.0:
            if o < lo - 1e-15 or o > hi + 1e-15:
                return None
            continue
        ta, tb = (lo - o) / dd, (hi - o) / dd
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1 + 1e-15:
            return None
    return t0, min(max(t1, t0), 1.0)


class RopedKdTree:
    """SAH kd-tree over scene geometry with per-leaf-side neighbor ropes.

    Split candidates are the projections of scene geometry vertices; segments
    overlapping a split plane live in both children. Rope selection cost is
    idealized as ceil(log2 n) (floor 1) for a side adjacent to n leaves, and
    primitive tests are deduplicated per query (ideal mailboxing).
    """

    def __init__(self, scene: Scene, c_t: float = 1.0, max_depth: int = 40):
        self.scene = scene
        self.c_t = c_t
        self.index = SceneIndex(scene)
        ids = self.index.ids
        if not ids:
            raise ValueError("scene has no geometry segments")
        xs = sorted({p.x for i in ids for p in (scene.segments[i].a, scene.segments[i].b)})
        ys = sorted({p.y for i in ids for p in (scene.segments[i].a, scene.segments[i].b)})
        self._cand = (np.array(xs), np.array(ys))
        box = (0.0, 0.0, 1.0, 1.0)
        clipped = {}
        for i in ids:
            r = _clip_segment(scene.segments[i], box)
            if r is not None:
                clipped[i] = r
        self.root = self._build(list(clipped.keys()), box, clipped, max_depth)
        self._leaves: list[KdNode] = []
        self._collect_leaves(self.root)
        self._attach_ropes(self.root, [None, None, None, None])
        self._count_rope_neighbors()

    def _extents(self, ids, box, clipped):
        x0 = np.empty(len(ids)); x1 = np.empty(len(ids))
        y0 = np.empty(len(ids)); y1 = np.empty(len(ids))
        for k, i in enumerate(ids):
            seg = self.scene.segments[i]
            ta, tb = clipped[i]
            xa, ya = seg.a.x + ta * (seg.b.x - seg.a.x), seg.a.y + ta * (seg.b.y - seg.a.y)
            xb, yb = seg.a.x + tb * (seg.b.x - seg.a.x), seg.a.y + tb * (seg.b.y - seg.a.y)
            x0[k], x1[k] = min(xa, xb), max(xa, xb)
            y0[k], y1[k] = min(ya, yb), max(ya, yb)
        return x0, x1, y0, y1

    def _build(self, ids, box, clipped, depth) -> KdNode:
        n = len(ids)
        if n == 0 or depth <= 0:
            return KdNode(box, prims=list(ids))
        x0, x1, y0, y1 = self._extents(ids, box, clipped)
        w, h = box[2] - box[0], box[3] - box[1]
        parent_half = max(w + h, 1e-30)
        best = None  # (cost, axis, pos)
        for axis in (0, 1):
            cand = self._cand[axis]
            lo, hi = (box[0], box[2]) if axis == 0 else (box[1], box[3])
            cand = cand[(cand > lo + 1e-12) & (cand < hi - 1e-12)]
            if len(cand) == 0:
                continue
            mins = np.sort(x0 if axis == 0 else y0)
            maxs = np.sort(x1 if axis == 0 else y1)
            n_l = np.searchsorted(mins, cand, side="right")
            n_r = n - np.searchsorted(maxs, cand, side="left")
            if axis == 0:
                pl = (cand - lo) + h
                pr = (hi - cand) + h
            else:
                pl = (cand - lo) + w
                pr = (hi - cand) + w
            cost = self.c_t + (pl / parent_half) * n_l + (pr / parent_half) * n_r
            k = int(np.argmin(cost))
            if best is None or float(cost[k]) < best[0]:
                best = (float(cost[k]), axis, float(cand[k]))
        if best is None or best[0] >= n:
            return KdNode(box, prims=list(ids))
        _, axis, pos = best
        if axis == 0:
            lbox = (box[0], box[1], pos, box[3])
            rbox = (pos, box[1], box[2], box[3])
        else:
            lbox = (box[0], box[1], box[2], pos)
            rbox = (box[0], pos, box[2], box[3])
        lids, lclip, rids, rclip = [], {}, [], {}
        for i in ids:
            for target_ids, target_clip, child_box in ((lids, lclip, lbox),
                                                       (rids, rclip, rbox)):
                r = _clip_segment(self.scene.segments[i], child_box)
                if r is not None:
                    target_ids.append(i)
                    target_clip[i] = r
        node = KdNode(box, axis=axis, pos=pos)
        node.left = self._build(lids, lbox, lclip, depth - 1)
        node.right = self._build(rids, rbox, rclip, depth - 1)
        return node

    def _collect_leaves(self, node: KdNode) -> None:
        if node.is_leaf:
            self._leaves.append(node)
        else:
            self._collect_leaves(node.left)
            self._collect_leaves(node.right)

    def _attach_ropes(self, node: KdNode, ropes) -> None:
        # rope order: [xmin side, xmax side, ymin side, ymax side]
        if node.is_leaf:
            node.ropes = [self._optimize_rope(r, s, node.box)
                          for s, r in enumerate(ropes)]
            return
        if node.axis == 0:
            self._attach_ropes(node.left, [ropes[0], node.right, ropes[2], ropes[3]])
            self._attach_ropes(node.right, [node.left, ropes[1], ropes[2], ropes[3]])
        else:
            self._attach_ropes(node.left, [ropes[0], ropes[1], ropes[2], node.right])
            self._attach_ropes(node.right, [ropes[0], ropes[1], node.left, ropes[3]])

    @staticmethod
    def _optimize_rope(rope: Optional[KdNode], side: int, box) -> Optional[KdNode]:
        """Descend the rope to the smallest subtree covering the whole side."""
        while rope is not None and not rope.is_leaf:
            side_axis = side // 2  # 0 for x sides, 1 for y sides
            if rope.axis == side_axis:
                # Perpendicular split: take the child adjacent to our side.
                rope = rope.right if side % 2 == 0 else rope.left
            else:
                lo, hi = (box[1], box[3]) if side_axis == 0 else (box[0], box[2])
                if rope.pos <= lo + 1e-15:
                    rope = rope.right
                elif rope.pos >= hi - 1e-15:
                    rope = rope.left
                else:
                    break
        return rope

    def _count_rope_neighbors(self) -> None:
        for leaf in self._leaves:
            counts = [0, 0, 0, 0]
            b = leaf.box
            for side in range(4):
                rope = leaf.ropes[side]
                if rope is None:
                    continue
                span = (b[1], b[3]) if side < 2 else (b[0], b[2])
                counts[side] = max(1, self._adjacent_leaves(rope, side, span))
            leaf.rope_counts = counts

    def _adjacent_leaves(self, node: KdNode, side: int, span) -> int:
        """Number of leaves under the rope target touching the side's span."""
        if node.is_leaf:
            lo, hi = (node.box[1], node.box[3]) if side < 2 else (node.box[0], node.box[2])
            return 1 if min(hi, span[1]) - max(lo, span[0]) > 1e-15 else 0
        return (self._adjacent_leaves(node.left, side, span)
                + self._adjacent_leaves(node.right, side, span))

    def locate_leaf(self, p: Point, direction: Optional[Point] = None) -> KdNode:
        node = self.root
        while not node.is_leaf:
            coord = p.x if node.axis == 0 else p.y
            if coord < node.pos:
                node = node.left
            elif coord > node.pos:
                node = node.right
            else:
                d = 0.0 if direction is None else (direction.x if node.axis == 0
                                                   else direction.y)
                node = node.right if d > 0.0 else node.left
        return node

    def intersect(self, ray: Ray) -> tuple[Optional[Hit], TraversalStats]:
        return kd_intersect(self, ray)

    def dump(self) -> str:
        lines = []
        leaf_ids = {id(leaf): k for k, leaf in enumerate(self._leaves)}

        def describe(n: Optional[KdNode]) -> str:
            if n is None:
                return "world"
            if n.is_leaf:
                return f"leaf#{leaf_ids[id(n)]}"
            return f"subtree@{n.axis}:{n.pos:.6g}"

        def rec(node: KdNode, depth: int) -> None:
            pad = "  " * depth
            b = node.box
            if node.is_leaf:
                ropes = ",".join(describe(r) for r in node.ropes)
                lines.append(f"{pad}leaf#{leaf_ids[id(node)]} "
                             f"box=({b[0]:.6g},{b[1]:.6g},{b[2]:.6g},{b[3]:.6g}) "
                             f"prims={node.prims} ropes=[{ropes}]")
            else:
                lines.append(f"{pad}split axis={'xy'[node.axis]} pos={node.pos:.6g}")
                rec(node.left, depth + 1)
                rec(node.right, depth + 1)

        rec(self.root, 0)
        return "\n".join(lines) + "\n"


def build_kdtree(scene: Scene, c_t: float = 1.0) -> RopedKdTree:
    return RopedKdTree(scene, c_t)


def kd_intersect(kd: RopedKdTree, ray: Ray,
                 start_leaf: Optional[KdNode] = None
                 ) -> tuple[Optional[Hit], TraversalStats]:
    """Stackless leaf-to-leaf walk via exit-side ropes.

    Counts leaves entered plus internal nodes descended after a rope jump,
    idealized rope-selection steps, and mailboxed primitive tests. Locating
    the origin's leaf is assumed known and not counted.
    """
    stats = TraversalStats()
    cur = start_leaf if start_leaf is not None else kd.locate_leaf(ray.origin, ray.direction)
    ox, oy = ray.origin
    dx, dy = ray.direction
    tested: set[int] = set()
    best: Optional[tuple[float, int, float]] = None
    scene = kd.scene
    guard = 4 * len(kd._leaves) + 16
    while guard > 0:
        guard -= 1
        stats.kd_nodes_visited += 1
        b = cur.box
        t_exit = math.inf
        side = -1
        if dx > 0.0:
            tx = (b[2] - ox) / dx
            if tx < t_exit:
                t_exit, side = tx, 1
        elif dx < 0.0:
            tx = (b[0] - ox) / dx
            if tx < t_exit:
                t_exit, side = tx, 0
        if dy > 0.0:
            ty = (b[3] - oy) / dy
            if ty < t_exit:
                t_exit, side = ty, 3
        elif dy < 0.0:
            ty = (b[1] - oy) / dy
            if ty < t_exit:
                t_exit, side = ty, 2
        for sid in cur.prims:
            if sid in tested:
                continue
            tested.add(sid)
            stats.kd_prim_tests += 1
            res = ray_segment_intersect(ray, scene.segments[sid])
            if res is None:
                continue
            t, u = res
            if best is None or t < best[0]:
                best = (t, sid, u)
        if best is not None and best[0] <= t_exit + 1e-12:
            return kd.index.canonical(ray, best[1], best[0], best[2]), stats
        if side < 0:
            return None, stats
        rope = cur.ropes[side]
        if rope is None:
            return None, stats
        stats.kd_rope_steps += max(1, math.ceil(math.log2(cur.rope_counts[side])))
        px, py = ox + t_exit * dx, oy + t_exit * dy
        node = rope
        while not node.is_leaf:
            stats.kd_nodes_visited += 1
            coord = px if node.axis == 0 else py
            if coord < node.pos:
                node = node.left
            elif coord > node.pos:
                node = node.right
            else:
                d = dx if node.axis == 0 else dy
                node = node.right if d > 0.0 else node.left
        cur = node
    raise TraversalError("kd walk did not terminate")


# ----------------------------------------------------------------------
# parameter sweep

@dataclass
class SweepResult:
    structure: object
    totals: dict[float, int]
    best_c_t: float


def sweep_structure_params(builder: Callable[[Scene, float], object], scene: Scene,
                           rays: Iterable[Ray],
                           grid: Iterable[float] = C_T_GRID) -> SweepResult:
    """Build one structure per cost parameter, measure total unweighted ops
    over the ray set, and keep the cheapest structure."""
    rays = list(rays)
    totals: dict[float, int] = {}
    best = None  # (total, c_t, structure)
    for c_t in grid:
        structure = builder(scene, c_t)
        total = 0
        for ray in rays:
            _, stats = structure.intersect(ray)
            total += stats.total()
        totals[c_t] = total
        if best is None or total < best[0]:
            best = (total, c_t, structure)
    return SweepResult(best[2], totals, best[1])
