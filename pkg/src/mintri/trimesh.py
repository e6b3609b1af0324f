"""Constrained triangulation data model and its structural edits.

A Triangulation tiles the unit square with counterclockwise triangles.
Vertices carry a degree-of-freedom class:

  DOF_FIXED       original scene geometry vertex, never moves
  DOF_ON_SEGMENT  Steiner vertex constrained to a scene segment (1 dof)
  DOF_FREE        unconstrained Steiner vertex (2 dof)

Edge addressing: edge ``i`` of triangle ``t`` is the edge opposite vertex
``t.v[i]``, with endpoints ``t.v[(i+1)%3], t.v[(i+2)%3]`` (counterclockwise
directed). ``t.nbr[i]`` is the triangle sharing that edge and ``t.flag[i]``
is -1 for an internal edge or the scene segment id the edge lies on.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional

from .geometry import (ON_SEGMENT_TOL, Orientation, Point, Segment, SegmentKind,
                       incircle, orient2d, point_segment_distance, signed_area2)
from .scene import Scene

DOF_FIXED = 0
DOF_ON_SEGMENT = 1
DOF_FREE = 2

INTERNAL = -1  # edge flag value for unconstrained edges

# Vertices this close to a segment count as lying on it during construction.
_SPLIT_TOL = 1e-12
# Do not flip edges whose incircle determinant is below this (cocircular noise).
_INCIRCLE_EPS = 1e-12


class Vertex:
    __slots__ = ("x", "y", "dof", "seg", "alive")

    def __init__(self, x: float, y: float, dof: int, seg: Optional[int] = None):
        self.x = x
        self.y = y
        self.dof = dof
        self.seg = seg
        self.alive = True

    @property
    def pos(self) -> Point:
        return Point(self.x, self.y)


class Tri:
    __slots__ = ("v", "nbr", "flag")

    def __init__(self, v: list[int], nbr: list[Optional[int]], flag: list[int]):
        self.v = v
        self.nbr = nbr
        self.flag = flag


class FlipResult(Enum):
    FLIPPED = "flipped"
    REJECTED_NOT_CONVEX = "not_convex"
    REJECTED_CONSTRAINED = "constrained"


class ContractBlock(Enum):
    BOTH_FIXED = "both_fixed"
    TOPOLOGY = "topology"


@dataclass
class ContractResult:
    ok: bool
    survivor: Optional[int] = None
    reason: Optional[ContractBlock] = None


class TriangulationError(ValueError):
    pass


class RefinementOverflowError(TriangulationError):
    """Refinement exceeded its vertex budget; carries the partial result."""

    def __init__(self, message: str, partial: "Triangulation"):
        super().__init__(message)
        self.partial = partial


class Triangulation:
    def __init__(self, scene: Scene):
        self.scene = scene
        self.verts: list[Vertex] = []
        self.tris: list[Optional[Tri]] = []
        self._free_slots: list[int] = []
        self.v2t: list[set[int]] = []

    # ------------------------------------------------------------------
    # bookkeeping

    def add_vertex(self, x: float, y: float, dof: int, seg: Optional[int] = None) -> int:
        self.verts.append(Vertex(x, y, dof, seg))
        self.v2t.append(set())
        return len(self.verts) - 1

    def _new_tri(self, v0: int, v1: int, v2: int,
                 nbr: Optional[list[Optional[int]]] = None,
                 flag: Optional[list[int]] = None) -> int:
        tri = Tri([v0, v1, v2], nbr if nbr is not None else [None, None, None],
                  flag if flag is not None else [INTERNAL, INTERNAL, INTERNAL])
        if self._free_slots:
            tid = self._free_slots.pop()
            self.tris[tid] = tri
        else:
            self.tris.append(tri)
            tid = len(self.tris) - 1
        for v in tri.v:
            self.v2t[v].add(tid)
        return tid

    def _del_tri(self, tid: int) -> None:
        tri = self.tris[tid]
        for v in tri.v:
            self.v2t[v].discard(tid)
        self.tris[tid] = None
        self._free_slots.append(tid)

    def alive_tris(self) -> Iterator[int]:
        for tid, tri in enumerate(self.tris):
            if tri is not None:
                yield tid

    @property
    def num_tris(self) -> int:
        return len(self.tris) - len(self._free_slots)

    @property
    def num_verts(self) -> int:
        return sum(1 for v in self.verts if v.alive)

    def pos(self, vid: int) -> Point:
        v = self.verts[vid]
        return Point(v.x, v.y)

    def edge_verts(self, t: int, i: int) -> tuple[int, int]:
        v = self.tris[t].v
        return v[(i + 1) % 3], v[(i + 2) % 3]

    def mirror(self, t: int, i: int) -> Optional[tuple[int, int]]:
        u = self.tris[t].nbr[i]
        if u is None:
            return None
        a, b = self.edge_verts(t, i)
        uv = self.tris[u].v
        for j in range(3):
            if uv[(j + 1) % 3] == b and uv[(j + 2) % 3] == a:
                return u, j
        raise TriangulationError(f"asymmetric neighbor link {t}:{i} -> {u}")

    def set_edge_flag(self, t: int, i: int, flag: int) -> None:
        self.tris[t].flag[i] = flag
        m = self.mirror(t, i)
        if m is not None:
            self.tris[m[0]].flag[m[1]] = flag

    def find_edge(self, a: int, b: int) -> Optional[tuple[int, int]]:
        """Locate edge (a, b); returns (t, i) for one incident triangle."""
        for tid in self.v2t[a]:
            v = self.tris[tid].v
            for i in range(3):
                p, q = v[(i + 1) % 3], v[(i + 2) % 3]
                if (p == a and q == b) or (p == b and q == a):
                    return tid, i
        return None

    def edge_length(self, t: int, i: int) -> float:
        a, b = self.edge_verts(t, i)
        va, vb = self.verts[a], self.verts[b]
        return math.hypot(vb.x - va.x, vb.y - va.y)

    def iter_edges(self) -> Iterator[tuple[int, int, int, int]]:
        """Unique edges as (t, i, a, b); each shared edge reported once."""
        for tid, tri in enumerate(self.tris):
            if tri is None:
                continue
            for i in range(3):
                n = tri.nbr[i]
                if n is None or tid < n:
                    v = tri.v
                    yield tid, i, v[(i + 1) % 3], v[(i + 2) % 3]

    def vertex_neighbors(self, vid: int) -> set[int]:
        out: set[int] = set()
        for tid in self.v2t[vid]:
            out.update(self.tris[tid].v)
        out.discard(vid)
        return out

    def star_area(self, vid: int) -> float:
        total = 0.0
        for tid in self.v2t[vid]:
            v = self.tris[tid].v
            total += signed_area2(self.pos(v[0]), self.pos(v[1]), self.pos(v[2]))
        return total / 2.0

    def tri_area(self, tid: int) -> float:
        v = self.tris[tid].v
        return signed_area2(self.pos(v[0]), self.pos(v[1]), self.pos(v[2])) / 2.0

    def constrained_partners(self, vid: int) -> list[tuple[int, int]]:
        """(neighbor vid, segment id) over constrained edges incident to vid."""
        out = []
        seen = set()
        for tid in self.v2t[vid]:
            tri = self.tris[tid]
            for i in range(3):
                if tri.flag[i] == INTERNAL:
                    continue
                a, b = self.edge_verts(tid, i)
                if vid not in (a, b):
                    continue
                other = b if a == vid else a
                if other not in seen:
                    seen.add(other)
                    out.append((other, tri.flag[i]))
        return out

    def copy(self) -> "Triangulation":
        out = Triangulation(self.scene)
        for v in self.verts:
            nv = Vertex(v.x, v.y, v.dof, v.seg)
            nv.alive = v.alive
            out.verts.append(nv)
        out.tris = [Tri(list(t.v), list(t.nbr), list(t.flag)) if t is not None else None
                    for t in self.tris]
        out._free_slots = list(self._free_slots)
        out.v2t = [set(s) for s in self.v2t]
        return out

    # ------------------------------------------------------------------
    # measurements

    def total_edge_length(self) -> float:
        total = 0.0
        for _, _, a, b in self.iter_edges():
            va, vb = self.verts[a], self.verts[b]
            total += math.hypot(vb.x - va.x, vb.y - va.y)
        return total

    def boundary_edge_length(self) -> float:
        total = 0.0
        for t, i, a, b in self.iter_edges():
            if self.tris[t].nbr[i] is None:
                va, vb = self.verts[a], self.verts[b]
                total += math.hypot(vb.x - va.x, vb.y - va.y)
        return total

    def tri_angles_cos(self, tid: int) -> list[float]:
        """Cosine of the interior angle at each vertex slot."""
        v = self.tris[tid].v
        p = [self.pos(v[k]) for k in range(3)]
        out = []
        for k in range(3):
            ax, ay = p[(k + 1) % 3][0] - p[k][0], p[(k + 1) % 3][1] - p[k][1]
            bx, by = p[(k + 2) % 3][0] - p[k][0], p[(k + 2) % 3][1] - p[k][1]
            na, nb = math.hypot(ax, ay), math.hypot(bx, by)
            if na == 0.0 or nb == 0.0:
                out.append(1.0)
            else:
                c = (ax * bx + ay * by) / (na * nb)
                out.append(max(-1.0, min(1.0, c)))
        return out

    def min_angle_deg(self, tid: int) -> float:
        return math.degrees(math.acos(max(self.tri_angles_cos(tid))))

    # ------------------------------------------------------------------
    # validation

    def validate_topology(self, max_reports: int = 50) -> list[str]:
        """Check all structural invariants; returns one line per violation."""
        report: list[str] = []

        def add(msg: str) -> None:
            if len(report) < max_reports:
                report.append(msg)

        for tid in self.alive_tris():
            tri = self.tris[tid]
            pts = [self.pos(v) for v in tri.v]
            if orient2d(*pts) is not Orientation.POSITIVE:
                add(f"triangle {tid} not positively oriented")
            for v in tri.v:
                if not self.verts[v].alive:
                    add(f"triangle {tid} references dead vertex {v}")
            for i in range(3):
                n = tri.nbr[i]
                a, b = self.edge_verts(tid, i)
                if n is not None:
                    if self.tris[n] is None:
                        add(f"triangle {tid} edge {i} points at dead triangle {n}")
                        continue
                    try:
                        m = self.mirror(tid, i)
                    except TriangulationError:
                        add(f"neighbor symmetry broken at {tid}:{i} -> {n}")
                        continue
                    if self.tris[m[0]].nbr[m[1]] != tid:
                        add(f"neighbor symmetry broken at {tid}:{i} -> {n}")
                    if self.tris[m[0]].flag[m[1]] != tri.flag[i]:
                        add(f"edge flag mismatch across {tid}:{i} / {n}")
                else:
                    if tri.flag[i] == INTERNAL:
                        add(f"triangle {tid} edge {i} has no neighbor and no constraint")
                    elif self.scene.segments[tri.flag[i]].kind is not SegmentKind.BOUNDARY:
                        add(f"geometry edge ({a},{b}) of triangle {tid} bounded by 1 triangle")
                if tri.flag[i] != INTERNAL:
                    seg = self.scene.segments[tri.flag[i]]
                    for vid in (a, b):
                        p = self.pos(vid)
                        if point_segment_distance(p, seg.a, seg.b) > 1e-9:
                            add(f"vertex {vid} of constrained edge not on segment {tri.flag[i]}")
        for vid, v in enumerate(self.verts):
            if not v.alive:
                if self.v2t[vid]:
                    add(f"dead vertex {vid} still referenced")
                continue
            for tid in self.v2t[vid]:
                if self.tris[tid] is None or vid not in self.tris[tid].v:
                    add(f"stale star entry {vid} -> {tid}")
            if v.dof == DOF_ON_SEGMENT:
                seg = self.scene.segments[v.seg]
                if point_segment_distance(v.pos, seg.a, seg.b) > ON_SEGMENT_TOL:
                    add(f"on-segment vertex {vid} off its host segment {v.seg}")
        report.extend(self._check_coverage(max_reports - len(report)))
        return report

    def _check_coverage(self, budget: int) -> list[str]:
        """Every scene segment must be exactly covered by its constrained chain."""
        if budget <= 0:
            return []
        report: list[str] = []
        by_seg: dict[int, list[tuple[int, int]]] = {}
        for t, i, a, b in self.iter_edges():
            f = self.tris[t].flag[i]
            if f != INTERNAL:
                by_seg.setdefault(f, []).append((a, b))
        for sid, seg in enumerate(self.scene.segments):
            edges = by_seg.get(sid, [])
            if not edges:
                report.append(f"segment {sid} has no covering edges")
                continue
            params: list[tuple[float, float]] = []
            ok = True
            for a, b in edges:
                if point_segment_distance(self.pos(a), seg.a, seg.b) > 1e-9 or \
                   point_segment_distance(self.pos(b), seg.a, seg.b) > 1e-9:
                    report.append(f"segment {sid} edge ({a},{b}) strays off the segment")
                    ok = False
                    continue
                ta = seg.param_of(self.pos(a))
                tb = seg.param_of(self.pos(b))
                params.append((min(ta, tb), max(ta, tb)))
            if not ok:
                continue
            params.sort()
            tol = 1e-9 / max(seg.length, 1e-30)
            if abs(params[0][0]) > tol or abs(params[-1][1] - 1.0) > tol:
                report.append(f"segment {sid} chain does not reach its endpoints")
                continue
            for (lo1, hi1), (lo2, hi2) in zip(params, params[1:]):
                if abs(hi1 - lo2) > tol:
                    kind = "gap" if lo2 > hi1 else "overlap"
                    report.append(f"segment {sid} chain has a {kind} near t={hi1:.6g}")
                    break
            if len(report) >= budget:
                break
        return report[:budget]

    # ------------------------------------------------------------------
    # point location

    def locate(self, p: Point, hint: Optional[int] = None) -> tuple[int, str, int]:
        """Find the triangle containing p.

        Returns (tid, where, idx) with where one of "inside", "edge"
        (idx = edge index) or "vertex" (idx = vertex id).
        """
        start = hint
        if start is None or start >= len(self.tris) or self.tris[start] is None:
            start = next(self.alive_tris())
        tid = start
        visited = 0
        cap = 4 * len(self.tris) + 16
        while visited < cap:
            visited += 1
            tri = self.tris[tid]
            pts = [self.pos(v) for v in tri.v]
            worst = None
            worst_val = 0.0
            for i in range(3):
                a, b = pts[(i + 1) % 3], pts[(i + 2) % 3]
                s = signed_area2(a, b, p)
                if s < worst_val:
                    worst_val = s
                    worst = i
            if worst is None:
                return self._classify_inside(tid, p, pts)
            n = tri.nbr[worst]
            if n is None:
                return self._classify_inside(tid, p, pts)
            tid = n
        return self._locate_scan(p)

    def _classify_inside(self, tid: int, p: Point, pts: list[Point]) -> tuple[int, str, int]:
        tri = self.tris[tid]
        for k in range(3):
            if p[0] == pts[k][0] and p[1] == pts[k][1]:
                return tid, "vertex", tri.v[k]
        for i in range(3):
            a, b = pts[(i + 1) % 3], pts[(i + 2) % 3]
            if point_segment_distance(p, a, b) <= _SPLIT_TOL:
                return tid, "edge", i
        return tid, "inside", -1

    def _locate_scan(self, p: Point) -> tuple[int, str, int]:
        for tid in self.alive_tris():
            tri = self.tris[tid]
            pts = [self.pos(v) for v in tri.v]
            if all(signed_area2(pts[(i + 1) % 3], pts[(i + 2) % 3], p) >= -1e-15
                   for i in range(3)):
                return self._classify_inside(tid, p, pts)
        raise TriangulationError(f"point {p} not inside any triangle")

    # ------------------------------------------------------------------
    # structural edits

    def flip_edge(self, t: int, i: int) -> FlipResult:
        """Replace the shared diagonal of two triangles by the opposite one.

        Rejected when the edge is constrained or the surrounding 4-gon is not
        strictly convex (a degenerate corner counts as non-convex).
        """
        tri = self.tris[t]
        if tri.flag[i] != INTERNAL:
            return FlipResult.REJECTED_CONSTRAINED
        m = self.mirror(t, i)
        if m is None:
            return FlipResult.REJECTED_CONSTRAINED
        u, j = m
        p = tri.v[i]
        a, b = self.edge_verts(t, i)
        q = self.tris[u].v[j]
        pp, pa, pq, pb = self.pos(p), self.pos(a), self.pos(q), self.pos(b)
        # Quad in ccw order is p, a, q, b; all corners must be strictly convex.
        for x, y, z in ((pp, pa, pq), (pa, pq, pb), (pq, pb, pp), (pb, pp, pa)):
            if orient2d(x, y, z) is not Orientation.POSITIVE:
                return FlipResult.REJECTED_NOT_CONVEX
        nt, nu = self.tris[t], self.tris[u]
        n_bp = nt.nbr[(i + 1) % 3]; f_bp = nt.flag[(i + 1) % 3]
        n_pa = nt.nbr[(i + 2) % 3]; f_pa = nt.flag[(i + 2) % 3]
        n_aq = nu.nbr[(j + 1) % 3]; f_aq = nu.flag[(j + 1) % 3]
        n_qb = nu.nbr[(j + 2) % 3]; f_qb = nu.flag[(j + 2) % 3]
        for v in nt.v:
            self.v2t[v].discard(t)
        for v in nu.v:
            self.v2t[v].discard(u)
        nt.v = [p, a, q]
        nt.nbr = [n_aq, u, n_pa]
        nt.flag = [f_aq, INTERNAL, f_pa]
        nu.v = [p, q, b]
        nu.nbr = [n_qb, n_bp, t]
        nu.flag = [f_qb, f_bp, INTERNAL]
        for v in nt.v:
            self.v2t[v].add(t)
        for v in nu.v:
            self.v2t[v].add(u)
        if n_bp is not None:
            self._relink_simple(n_bp, t, u)
        if n_aq is not None:
            self._relink_simple(n_aq, u, t)
        return FlipResult.FLIPPED

    def _relink_simple(self, n: int, old: Optional[int], new: Optional[int]) -> None:
        tri = self.tris[n]
        for k in range(3):
            if tri.nbr[k] == old:
                tri.nbr[k] = new
                return

    # -- edge and triangle splits (cdt construction, refinement) --------

    def split_edge(self, t: int, i: int, p: Point, dof: int, seg: Optional[int]) -> int:
        """Insert a vertex at p on edge (t, i); returns the new vertex id."""
        vid = self.add_vertex(p.x, p.y, dof, seg)
        flag = self.tris[t].flag[i]
        m = self.mirror(t, i)
        self._split_one_side(t, i, vid, flag)
        if m is not None:
            self._split_one_side(m[0], m[1], vid, flag)
        self._stitch_around_vertex(vid)
        return vid

    def _split_one_side(self, t: int, i: int, vid: int, flag: int) -> None:
        tri = self.tris[t]
        c = tri.v[i]
        a, b = self.edge_verts(t, i)
        n_bc = tri.nbr[(i + 1) % 3]; f_bc = tri.flag[(i + 1) % 3]
        n_ca = tri.nbr[(i + 2) % 3]; f_ca = tri.flag[(i + 2) % 3]
        self._del_tri(t)
        t1 = self._new_tri(c, a, vid, [None, None, n_ca], [flag, INTERNAL, f_ca])
        t2 = self._new_tri(c, vid, b, [None, n_bc, None], [flag, f_bc, INTERNAL])
        self.tris[t1].nbr[1] = t2
        self.tris[t2].nbr[2] = t1
        if n_ca is not None:
            self._relink_simple(n_ca, t, t1)
        if n_bc is not None:
            self._relink_simple(n_bc, t, t2)

    def _stitch_around_vertex(self, vid: int) -> None:
        """Repair neighbor links among the triangles incident to vid."""
        edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for tid in self.v2t[vid]:
            for k in range(3):
                a, b = self.edge_verts(tid, k)
                if vid in (a, b):
                    edges.setdefault((min(a, b), max(a, b)), []).append((tid, k))
        for lst in edges.values():
            if len(lst) == 2:
                (t1, k1), (t2, k2) = lst
                self.tris[t1].nbr[k1] = t2
                self.tris[t2].nbr[k2] = t1

    def split_tri(self, t: int, p: Point, dof: int, seg: Optional[int]) -> int:
        """Insert a vertex at p strictly inside triangle t (1-to-3 split)."""
        vid = self.add_vertex(p.x, p.y, dof, seg)
        tri = self.tris[t]
        v0, v1, v2 = tri.v
        n0, n1, n2 = tri.nbr
        f0, f1, f2 = tri.flag
        self._del_tri(t)
        t0 = self._new_tri(vid, v1, v2, [n0, None, None], [f0, INTERNAL, INTERNAL])
        t1 = self._new_tri(vid, v2, v0, [n1, None, None], [f1, INTERNAL, INTERNAL])
        t2 = self._new_tri(vid, v0, v1, [n2, None, None], [f2, INTERNAL, INTERNAL])
        self.tris[t0].nbr[1] = t1; self.tris[t0].nbr[2] = t2
        self.tris[t1].nbr[1] = t2; self.tris[t1].nbr[2] = t0
        self.tris[t2].nbr[1] = t0; self.tris[t2].nbr[2] = t1
        for n, new in ((n0, t0), (n1, t1), (n2, t2)):
            if n is not None:
                self._relink_simple(n, t, new)
        return vid

    # -- Delaunay legalization -------------------------------------------

    def legalize_around(self, vid: int) -> None:
        stack = [(tid, self.tris[tid].v.index(vid)) for tid in list(self.v2t[vid])]
        guard = 0
        while stack:
            guard += 1
            if guard > 50 * len(self.tris) + 1000:
                raise TriangulationError("legalization did not settle")
            t, i = stack.pop()
            tri = self.tris[t]
            if tri is None or i >= 3 or tri.v[i] != vid:
                continue
            if tri.flag[i] != INTERNAL:
                continue
            m = self.mirror(t, i)
            if m is None:
                continue
            u, j = m
            q = self.tris[u].v[j]
            pts = [self.pos(v) for v in tri.v]
            if incircle(pts[0], pts[1], pts[2], self.pos(q)) > _INCIRCLE_EPS:
                if self.flip_edge(t, i) is FlipResult.FLIPPED:
                    # t now holds (vid, a, q) and u holds (vid, q, b).
                    stack.append((t, self.tris[t].v.index(vid)))
                    stack.append((u, self.tris[u].v.index(vid)))

    # -- subdivision -------------------------------------------------------

    def subdivide(self) -> "Triangulation":
        """Split every triangle into four; every edge gains a midpoint vertex.

        Midpoints of constrained edges become on-segment vertices of the same
        host segment, all other midpoints are free.
        """
        out = Triangulation(self.scene)
        vmap: dict[int, int] = {}
        for vid, v in enumerate(self.verts):
            if v.alive:
                vmap[vid] = out.add_vertex(v.x, v.y, v.dof, v.seg)
        mid: dict[tuple[int, int], int] = {}
        for t, i, a, b in self.iter_edges():
            key = (min(a, b), max(a, b))
            flag = self.tris[t].flag[i]
            if flag != INTERNAL:
                seg = self.scene.segments[flag]
                u = 0.5 * (seg.param_of(self.pos(a)) + seg.param_of(self.pos(b)))
                p = seg.point_at(u)
                mid[key] = out.add_vertex(p.x, p.y, DOF_ON_SEGMENT, flag)
            else:
                pa, pb = self.pos(a), self.pos(b)
                mid[key] = out.add_vertex(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y),
                                          DOF_FREE, None)
        for tid in self.alive_tris():
            tri = self.tris[tid]
            v0, v1, v2 = tri.v
            m0 = mid[(min(v1, v2), max(v1, v2))]
            m1 = mid[(min(v2, v0), max(v2, v0))]
            m2 = mid[(min(v0, v1), max(v0, v1))]
            f0, f1, f2 = tri.flag
            out._new_tri(vmap[v0], m2, m1, flag=[INTERNAL, f1, f2])
            out._new_tri(vmap[v1], m0, m2, flag=[INTERNAL, f2, f0])
            out._new_tri(vmap[v2], m1, m0, flag=[INTERNAL, f0, f1])
            out._new_tri(m0, m1, m2, flag=[INTERNAL, INTERNAL, INTERNAL])
        out.rebuild_links()
        return out

    def rebuild_links(self) -> None:
        """Recompute all neighbor links from shared edges."""
        edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for tid in self.alive_tris():
            tri = self.tris[tid]
            tri.nbr = [None, None, None]
            for i in range(3):
                a, b = self.edge_verts(tid, i)
                edges.setdefault((min(a, b), max(a, b)), []).append((tid, i))
        for key, lst in edges.items():
            if len(lst) > 2:
                raise TriangulationError(f"edge {key} bounded by {len(lst)} triangles")
            if len(lst) == 2:
                (t1, i1), (t2, i2) = lst
                self.tris[t1].nbr[i1] = t2
                self.tris[t2].nbr[i2] = t1

    # -- contraction -------------------------------------------------------

    def contract_edge(self, t: int, i: int) -> ContractResult:
        """Contract edge (t, i), merging its endpoints into one vertex.

        Merge rules by vertex class: equal classes merge at the edge midpoint
        (same class), a fixed endpoint absorbs the other, an on-segment
        endpoint absorbs a free one. When the default position violates the
        topology, 8 fallback positions are tried along the original edge (free
        survivor) or along the host segment between the surviving chain
        neighbors (on-segment survivor). Callers are expected to have checked
        objective-level contractibility already; this method re-verifies the
        structural topology only.
        """
        a, b = self.edge_verts(t, i)
        va, vb = self.verts[a], self.verts[b]
        if va.dof == DOF_FIXED and vb.dof == DOF_FIXED:
            return ContractResult(False, reason=ContractBlock.BOTH_FIXED)
        if va.dof == vb.dof:
            if va.dof == DOF_ON_SEGMENT and va.seg != vb.seg:
                return ContractResult(False, reason=ContractBlock.TOPOLOGY)
            survivor, dead = a, b
        elif va.dof < vb.dof:
            survivor, dead = a, b
        else:
            survivor, dead = b, a

        shared = self.v2t[a] & self.v2t[b]
        if len(shared) not in (1, 2):
            return ContractResult(False, reason=ContractBlock.TOPOLOGY)
        surviving = (self.v2t[a] | self.v2t[b]) - shared
        if not surviving:
            return ContractResult(False, reason=ContractBlock.TOPOLOGY)

        # Flag compatibility across each dying triangle.
        merged_flags: dict[int, int] = {}
        for d in shared:
            tri = self.tris[d]
            ia, ib = tri.v.index(a), tri.v.index(b)
            f_ac, f_bc = tri.flag[ib], tri.flag[ia]  # edge (a,c) is opposite b
            if f_ac != INTERNAL and f_bc != INTERNAL and f_ac != f_bc:
                return ContractResult(False, reason=ContractBlock.TOPOLOGY)
            if tri.nbr[ia] is None and tri.nbr[ib] is None:
                return ContractResult(False, reason=ContractBlock.TOPOLOGY)
            merged_flags[d] = f_ac if f_ac != INTERNAL else f_bc

        # Any vertex adjacent to both endpoints outside the shared triangles
        # would leave an edge bounded by more than two triangles after merge.
        counts: dict[int, int] = {}
        for tid in surviving:
            tv = self.tris[tid].v
            hits = 1 if (a in tv) != (b in tv) else 2
            for vtx in tv:
                if vtx not in (a, b):
                    counts[vtx] = counts.get(vtx, 0) + hits
        if any(c > 2 for c in counts.values()):
            return ContractResult(False, reason=ContractBlock.TOPOLOGY)

        chosen = None
        for pos in self._contract_candidates(survivor, dead):
            if self._contract_position_ok(pos, survivor, dead, surviving, merged_flags):
                chosen = pos
                break
        if chosen is None:
            return ContractResult(False, reason=ContractBlock.TOPOLOGY)

        sv = self.verts[survivor]
        sv.x, sv.y = chosen.x, chosen.y
        for d in shared:
            tri = self.tris[d]
            ia, ib = tri.v.index(a), tri.v.index(b)
            n_ac, n_bc = tri.nbr[ib], tri.nbr[ia]
            flag = merged_flags[d]
            self._del_tri(d)
            if n_ac is not None:
                self._relink_set_flag(n_ac, d, n_bc, flag)
            if n_bc is not None:
                self._relink_set_flag(n_bc, d, n_ac, flag)
        for tid in list(self.v2t[dead]):
            tri = self.tris[tid]
            tri.v[tri.v.index(dead)] = survivor
            self.v2t[survivor].add(tid)
        self.v2t[dead] = set()
        self.verts[dead].alive = False
        return ContractResult(True, survivor=survivor)

    def _relink_set_flag(self, n: int, old: int, new: Optional[int], flag: int) -> None:
        tri = self.tris[n]
        for k in range(3):
            if tri.nbr[k] == old:
                tri.nbr[k] = new
                tri.flag[k] = flag
                return

    def _contract_candidates(self, survivor: int, dead: int) -> list[Point]:
        sv, dv = self.verts[survivor], self.verts[dead]
        if sv.dof == DOF_FIXED:
            return [sv.pos]
        out: list[Point] = []
        if sv.dof == DOF_FREE:
            out.append(Point(0.5 * (sv.x + dv.x), 0.5 * (sv.y + dv.y)))
            for k in range(1, 9):
                u = k / 9.0
                out.append(Point(sv.x + u * (dv.x - sv.x), sv.y + u * (dv.y - sv.y)))
            return out
        # On-segment survivor.
        sid = sv.seg
        seg = self.scene.segments[sid]
        ts = seg.param_of(sv.pos)
        if dv.dof == DOF_ON_SEGMENT:
            td = seg.param_of(dv.pos)
            out.append(seg.point_at(0.5 * (ts + td)))
        else:
            out.append(sv.pos)
        lo, hi = self._chain_window(survivor, dead, sid)
        for k in range(1, 9):
            out.append(seg.point_at(lo + (hi - lo) * k / 9.0))
        return out

    def _chain_window(self, survivor: int, dead: int, sid: int) -> tuple[float, float]:
        """Open parameter window between the chain neighbors of the merged vertex."""
        seg = self.scene.segments[sid]
        ts = seg.param_of(self.verts[survivor].pos)
        lo, hi = 0.0, 1.0
        for vid in (survivor, dead):
            v = self.verts[vid]
            if v.dof == DOF_FIXED:
                continue
            for other, flag in self.constrained_partners(vid):
                if other in (survivor, dead) or flag != sid:
                    continue
                u = seg.param_of(self.verts[other].pos)
                if u <= ts and u > lo:
                    lo = u
                elif u >= ts and u < hi:
                    hi = u
        return lo, hi

    def _contract_position_ok(self, pos: Point, survivor: int, dead: int,
                              surviving: set[int], merged_flags: dict[int, int]) -> bool:
        for tid in surviving:
            tri = self.tris[tid]
            pts = [pos if v in (survivor, dead) else self.pos(v) for v in tri.v]
            if orient2d(*pts) is not Orientation.POSITIVE:
                return False
        # Surviving constrained edges at either endpoint must stay on their host.
        for vid in (survivor, dead):
            for tid in self.v2t[vid]:
                if tid not in surviving:
                    continue
                tri = self.tris[tid]
                for k in range(3):
                    if tri.flag[k] == INTERNAL:
                        continue
                    p, q = self.edge_verts(tid, k)
                    if vid not in (p, q):
                        continue
                    seg = self.scene.segments[tri.flag[k]]
                    if point_segment_distance(pos, seg.a, seg.b) > 1e-9:
                        return False
        for flag in merged_flags.values():
            if flag != INTERNAL:
                seg = self.scene.segments[flag]
                if point_segment_distance(pos, seg.a, seg.b) > 1e-9:
                    return False
        return True


# ----------------------------------------------------------------------
# constrained Delaunay construction

def build_cdt(scene: Scene) -> Triangulation:
    """Constrained Delaunay triangulation of the scene inside its unit square.

    All scene vertices appear (deduplicated by exact coordinates), every scene
    segment is covered by a chain of constrained edges, and no Steiner
    vertices are introduced beyond the four square corners.
    """
    scene.validate()
    tri = Triangulation(scene)
    boundary_ids = [i for i, s in enumerate(scene.segments)
                    if s.kind is SegmentKind.BOUNDARY]
    if len(boundary_ids) != 4:
        raise TriangulationError("scene must carry exactly 4 boundary segments")
    corner_pos = [scene.segments[boundary_ids[k]].a for k in range(4)]
    corners = [tri.add_vertex(p.x, p.y, DOF_FIXED) for p in corner_pos]
    bottom, right, top, left = boundary_ids
    tri._new_tri(corners[0], corners[1], corners[2],
                 flag=[right, INTERNAL, bottom])
    tri._new_tri(corners[0], corners[2], corners[3],
                 flag=[top, left, INTERNAL])
    tri.rebuild_links()

    vid_of: dict[tuple[float, float], int] = {
        (p.x, p.y): corners[k] for k, p in enumerate(corner_pos)}
    hint = 0
    for seg in scene.segments:
        if seg.kind is not SegmentKind.GEOMETRY:
            continue
        for p in (seg.a, seg.b):
            key = (p.x, p.y)
            if key not in vid_of:
                vid_of[key] = _insert_point(tri, p, hint)
                hint = next(iter(tri.v2t[vid_of[key]]))
    for sid, seg in enumerate(scene.segments):
        if seg.kind is not SegmentKind.GEOMETRY:
            continue
        _enforce_segment(tri, vid_of[(seg.a.x, seg.a.y)], vid_of[(seg.b.x, seg.b.y)], sid)
    return tri


def _insert_point(tri: Triangulation, p: Point, hint: int) -> int:
    tid, where, idx = tri.locate(p, hint)
    if where == "vertex":
        return idx
    if where == "edge":
        vid = tri.split_edge(tid, idx, p, DOF_FIXED, None)
    else:
        vid = tri.split_tri(tid, p, DOF_FIXED, None)
    tri.legalize_around(vid)
    return vid


def _on_segment_between(tri: Triangulation, vid: int, pa: Point, pb: Point) -> bool:
    p = tri.pos(vid)
    if point_segment_distance(p, pa, pb) > _SPLIT_TOL:
        return False
    ex, ey = pb.x - pa.x, pb.y - pa.y
    u = ((p.x - pa.x) * ex + (p.y - pa.y) * ey) / (ex * ex + ey * ey)
    return 1e-12 < u < 1.0 - 1e-12


def _enforce_segment(tri: Triangulation, va: int, vb: int, sid: int) -> None:
    """Make (va, vb) appear as a chain of constrained edges flagged sid."""
    guard = 0
    while True:
        guard += 1
        if guard > 64:
            raise TriangulationError(f"segment {sid} enforcement did not converge")
        found = tri.find_edge(va, vb)
        if found is not None:
            tri.set_edge_flag(found[0], found[1], sid)
            return
        pa, pb = tri.pos(va), tri.pos(vb)
        # A vertex on the open segment splits enforcement in two.
        hop = None
        for other in tri.vertex_neighbors(va):
            if other != vb and _on_segment_between(tri, other, pa, pb):
                hop = other
                break
        if hop is None:
            kind, payload = _collect_crossings(tri, va, vb, sid)
            if kind == "hop":
                hop = payload
        if hop is not None:
            _enforce_segment(tri, va, hop, sid)
            _enforce_segment(tri, hop, vb, sid)
            return
        queue = deque(payload)
        stall = 0
        while queue:
            aa, bb = queue.popleft()
            loc = tri.find_edge(aa, bb)
            if loc is None:
                continue
            if not _edge_crosses(tri, aa, bb, pa, pb):
                continue
            t, i = loc
            p_apex = tri.tris[t].v[i]
            m = tri.mirror(t, i)
            q_apex = tri.tris[m[0]].v[m[1]] if m is not None else None
            if tri.flip_edge(t, i) is FlipResult.FLIPPED:
                stall = 0
                if q_apex is not None and _edge_crosses(tri, p_apex, q_apex, pa, pb):
                    queue.append((p_apex, q_apex))
            else:
                queue.append((aa, bb))
                stall += 1
                if stall > len(queue) + 4:
                    break  # stuck on a non-convex pocket; re-walk from scratch


def _edge_crosses(tri: Triangulation, x: int, y: int, pa: Point, pb: Point) -> bool:
    px, py = tri.pos(x), tri.pos(y)
    d1 = signed_area2(pa, pb, px)
    d2 = signed_area2(pa, pb, py)
    if (d1 > 0) == (d2 > 0) or d1 == 0 or d2 == 0:
        return False
    d3 = signed_area2(px, py, pa)
    d4 = signed_area2(px, py, pb)
    return (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0


def _collect_crossings(tri: Triangulation, va: int, vb: int, sid: int):
    """Edges properly crossed by the open segment va->vb, in pierce order.

    Returns ("ok", edge pair list) or ("hop", vid) when a vertex lying on the
    open segment is discovered mid-walk.
    """
    pa, pb = tri.pos(va), tri.pos(vb)
    start = None
    for tid in tri.v2t[va]:
        k = tri.tris[tid].v.index(va)
        x, y = tri.edge_verts(tid, k)
        if _edge_crosses(tri, x, y, pa, pb):
            start = (tid, k)
            break
    if start is None:
        raise TriangulationError(
            f"segment {sid}: no crossing fan edge from vertex {va}")
    out = []
    tid, k = start
    guard = 0
    while True:
        guard += 1
        if guard > 4 * len(tri.tris) + 16:
            raise TriangulationError(f"segment {sid}: crossing walk did not terminate")
        if tri.tris[tid].flag[k] != INTERNAL:
            raise TriangulationError(
                f"segment {sid} crosses constrained edge {tri.edge_verts(tid, k)}")
        out.append(tri.edge_verts(tid, k))
        m = tri.mirror(tid, k)
        if m is None:
            raise TriangulationError(f"segment {sid}: walk left the square")
        u, j = m
        apex = tri.tris[u].v[j]
        if apex == vb:
            return ("ok", out)
        if _on_segment_between(tri, apex, pa, pb):
            return ("hop", apex)
        x, y = tri.edge_verts(tid, k)
        nxt = None
        for kk in range(3):
            xx, yy = tri.edge_verts(u, kk)
            if {xx, yy} == {x, y}:
                continue
            if _edge_crosses(tri, xx, yy, pa, pb):
                nxt = kk
                break
        if nxt is None:
            raise TriangulationError(f"segment {sid}: crossing walk lost the segment")
        tid, k = u, nxt


# ----------------------------------------------------------------------
# refinement

def refine_cdt(base: Triangulation, min_angle: float, max_area: float) -> Triangulation:
    """Delaunay refinement: insert Steiner vertices until every triangle has
    minimum angle >= min_angle (degrees) and area <= max_area.

    Triangles whose small angle sits between two constrained edges are left
    alone (they cannot be improved). Vertices inserted on constrained edges
    are on-segment, all others free. Aborts with RefinementOverflowError when
    the vertex count exceeds 50x the input.
    """
    if min_angle > 33.0:
        raise ValueError("min_angle above 33 degrees risks non-termination")
    tri = base.copy()
    if min_angle <= 0.0 and not math.isfinite(max_area):
        return tri
    cap = max(50 * tri.num_verts, 1000)
    cos_bound = math.cos(math.radians(min_angle)) if min_angle > 0 else 2.0

    def tri_bad(tid: int) -> bool:
        t = tri.tris[tid]
        if t is None:
            return False
        if math.isfinite(max_area) and tri.tri_area(tid) > max_area:
            return True
        if min_angle <= 0.0:
            return False
        cosines = tri.tri_angles_cos(tid)
        worst = max(range(3), key=lambda k: cosines[k])
        if cosines[worst] <= cos_bound:
            return False
        flags = tri.tris[tid].flag
        if flags[(worst + 1) % 3] != INTERNAL and flags[(worst + 2) % 3] != INTERNAL:
            return False  # angle forced by two constrained edges
        return True

    def encroached(tid: int, i: int) -> bool:
        a, b = tri.edge_verts(tid, i)
        pa, pb = tri.pos(a), tri.pos(b)
        for side in (tri.tris[tid].v[i],):
            p = tri.pos(side)
            if (pa.x - p.x) * (pb.x - p.x) + (pa.y - p.y) * (pb.y - p.y) < -1e-14:
                return True
        m = tri.mirror(tid, i)
        if m is not None:
            p = tri.pos(tri.tris[m[0]].v[m[1]])
            if (pa.x - p.x) * (pb.x - p.x) + (pa.y - p.y) * (pb.y - p.y) < -1e-14:
                return True
        return False

    def point_encroaches(p: Point, tid: int, i: int) -> bool:
        a, b = tri.edge_verts(tid, i)
        pa, pb = tri.pos(a), tri.pos(b)
        return (pa.x - p.x) * (pb.x - p.x) + (pa.y - p.y) * (pb.y - p.y) < -1e-14

    def split_subsegment(tid: int, i: int) -> Optional[int]:
        sid = tri.tris[tid].flag[i]
        seg = tri.scene.segments[sid]
        a, b = tri.edge_verts(tid, i)
        ua, ub = seg.param_of(tri.pos(a)), seg.param_of(tri.pos(b))
        frac = _shell_fraction(tri, a, b, sid)
        u = ua + frac * (ub - ua)
        p = seg.point_at(u)
        if (p.x, p.y) in ((tri.pos(a).x, tri.pos(a).y), (tri.pos(b).x, tri.pos(b).y)):
            return None
        vid = tri.split_edge(tid, i, p, DOF_ON_SEGMENT, sid)
        tri.legalize_around(vid)
        return vid

    # Queue entries are (a, b, p): split edge (a, b) when the remembered point
    # p still encroaches it, or (p is None) when any current apex does.
    seg_queue: deque[tuple[int, int, Optional[Point]]] = deque()
    tri_queue: deque[int] = deque(tri.alive_tris())
    for t, i, _, _ in tri.iter_edges():
        if tri.tris[t].flag[i] != INTERNAL and encroached(t, i):
            a, b = tri.edge_verts(t, i)
            seg_queue.append((a, b, None))

    def queue_around(vid: int) -> None:
        for tid in tri.v2t[vid]:
            tri_queue.append(tid)
            t = tri.tris[tid]
            for k in range(3):
                if t.flag[k] != INTERNAL and encroached(tid, k):
                    a, b = tri.edge_verts(tid, k)
                    seg_queue.append((a, b, None))

    guard = 0
    while seg_queue or tri_queue:
        guard += 1
        if guard > 200 * cap:
            raise RefinementOverflowError("refinement stalled", tri)
        if tri.num_verts > cap:
            raise RefinementOverflowError(
                f"refinement exceeded 50x vertex budget ({cap})", tri)
        if seg_queue:
            a, b, p = seg_queue.popleft()
            loc = tri.find_edge(a, b)
            if loc is None or tri.tris[loc[0]].flag[loc[1]] == INTERNAL:
                continue
            if p is None:
                if not encroached(*loc):
                    continue
            elif not point_encroaches(p, *loc):
                continue
            vid = split_subsegment(*loc)
            if vid is not None:
                queue_around(vid)
            continue
        tid = tri_queue.popleft()
        if tri.tris[tid] is None or not tri_bad(tid):
            continue
        cc = _circumcenter(tri, tid)
        if cc is None:
            continue
        res = _walk_to(tri, tid, cc)
        if res[0] == "blocked":
            bt, bi = res[1], res[2]
            if point_encroaches(cc, bt, bi):
                a, b = tri.edge_verts(bt, bi)
                seg_queue.append((a, b, cc))
                tri_queue.append(tid)
            elif encroached(bt, bi):
                a, b = tri.edge_verts(bt, bi)
                seg_queue.append((a, b, None))
                tri_queue.append(tid)
            # else: circumcenter hidden behind a far constraint; leave as-is
            continue
        target = res[1]
        enc = _encroached_by_point(tri, cc)
        if enc:
            seg_queue.extend((a, b, cc) for a, b in enc)
            tri_queue.append(tid)
            continue
        loc = tri.locate(cc, target)
        if loc[1] == "vertex":
            continue
        if loc[1] == "edge":
            if tri.tris[loc[0]].flag[loc[2]] != INTERNAL:
                a, b = tri.edge_verts(loc[0], loc[2])
                seg_queue.append((a, b, cc))
                tri_queue.append(tid)
                continue
            vid = tri.split_edge(loc[0], loc[2], cc, DOF_FREE, None)
        else:
            vid = tri.split_tri(loc[0], cc, DOF_FREE, None)
        tri.legalize_around(vid)
        queue_around(vid)
    return tri


def _shell_fraction(tri: Triangulation, a: int, b: int, sid: int) -> float:
    """Split fraction for subsegment (a, b): midpoint, or a power-of-two
    distance from an input vertex that joins another constraint at an acute
    angle (concentric shell splitting)."""
    for vid, other in ((a, b), (b, a)):
        v = tri.verts[vid]
        if v.dof != DOF_FIXED:
            continue
        acute = False
        for nb, flag in tri.constrained_partners(vid):
            if flag == sid or nb == other:
                continue
            p, q, r = tri.pos(other), tri.pos(vid), tri.pos(nb)
            ux, uy = p.x - q.x, p.y - q.y
            wx, wy = r.x - q.x, r.y - q.y
            nu, nw = math.hypot(ux, uy), math.hypot(wx, wy)
            if nu > 0 and nw > 0 and (ux * wx + uy * wy) / (nu * nw) > 0.5:
                acute = True
                break
        if acute:
            length = math.hypot(tri.pos(b).x - tri.pos(a).x, tri.pos(b).y - tri.pos(a).y)
            d = 2.0 ** round(math.log2(length / 2.0))
            d = min(max(d, 0.25 * length), 0.75 * length)
            frac = d / length
            return frac if vid == a else 1.0 - frac
    return 0.5


def _circumcenter(tri: Triangulation, tid: int) -> Optional[Point]:
    v = tri.tris[tid].v
    a, b, c = (tri.pos(v[k]) for k in range(3))
    d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y))
    if d == 0.0:
        return None
    a2, b2, c2 = a.x * a.x + a.y * a.y, b.x * b.x + b.y * b.y, c.x * c.x + c.y * c.y
    ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d
    uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d
    if not (math.isfinite(ux) and math.isfinite(uy)):
        return None
    # Clamp just inside the square so boundary-adjacent centers stay usable.
    ux = min(max(ux, 1e-9), 1.0 - 1e-9)
    uy = min(max(uy, 1e-9), 1.0 - 1e-9)
    return Point(ux, uy)


def _walk_to(tri: Triangulation, tid: int, target: Point):
    """Walk from the centroid of tid toward target.

    Returns ("ok", tid) when the containing triangle is reached, or
    ("blocked", t, i) when a constrained edge blocks the way.
    """
    v = tri.tris[tid].v
    src = Point(sum(tri.pos(k).x for k in v) / 3.0, sum(tri.pos(k).y for k in v) / 3.0)
    cur = tid
    prev = None
    guard = 0
    while guard < 4 * len(tri.tris) + 16:
        guard += 1
        t = tri.tris[cur]
        pts = [tri.pos(k) for k in t.v]
        inside = True
        exit_edge = None
        for i in range(3):
            a, b = pts[(i + 1) % 3], pts[(i + 2) % 3]
            if signed_area2(a, b, target) < -1e-15:
                inside = False
                if _edge_crosses_open(src, target, a, b):
                    exit_edge = i
                    break
        if inside:
            return ("ok", cur)
        if exit_edge is None:
            return ("ok", cur)
        if t.flag[exit_edge] != INTERNAL:
            return ("blocked", cur, exit_edge)
        n = t.nbr[exit_edge]
        if n is None or n == prev:
            return ("ok", cur)
        prev, cur = cur, n
    return ("ok", cur)


def _edge_crosses_open(pa: Point, pb: Point, x: Point, y: Point) -> bool:
    d1 = signed_area2(pa, pb, x)
    d2 = signed_area2(pa, pb, y)
    if (d1 > 0) == (d2 > 0):
        return False
    d3 = signed_area2(x, y, pa)
    d4 = signed_area2(x, y, pb)
    return (d3 > 0) != (d4 > 0)


def _encroached_by_point(tri: Triangulation, p: Point) -> list[tuple[int, int]]:
    out = []
    for t, i, a, b in tri.iter_edges():
        if tri.tris[t].flag[i] == INTERNAL:
            continue
        pa, pb = tri.pos(a), tri.pos(b)
        if (pa.x - p.x) * (pb.x - p.x) + (pa.y - p.y) * (pb.y - p.y) < -1e-14:
            out.append((a, b))
    return out


def optimal_refined_cdt(scene: Scene,
                        angle_grid: Optional[list[float]] = None,
                        area_grid: Optional[list[float]] = None) -> Triangulation:
    """Sweep refinement parameters and keep the shortest-total-length result.

    The sweep must include the no-refinement cell (angle 0, unbounded area) so
    its minimum can never exceed the unrefined triangulation's length.
    """
    if angle_grid is None:
        angle_grid = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    if area_grid is None:
        area_grid = [math.inf, 1e-1, 1e-2, 1e-3, 1e-4]
    if not angle_grid or not area_grid:
        raise ValueError("parameter grids must be nonempty")
    if 0.0 not in angle_grid or not any(math.isinf(a) for a in area_grid):
        raise ValueError("grids must include the no-refinement setting")
    base = build_cdt(scene)
    best = None
    best_len = math.inf
    errors = []
    for ang in angle_grid:
        for area in area_grid:
            try:
                cand = refine_cdt(base, ang, area)
            except TriangulationError as exc:
                errors.append(f"angle={ang} area={area}: {exc}")
                continue
            length = cand.total_edge_length()
            if length < best_len:
                best, best_len = cand, length
    if best is None:
        raise TriangulationError("all refinement cells failed: " + "; ".join(errors))
    return best


# ----------------------------------------------------------------------
# file formats

_TRI_HEADER = "mintri-tri v1"


def _fmt(x: float) -> str:
    return format(x, ".17g")


def save_triangulation(tri: Triangulation, path: str) -> None:
    """Native text format: versioned header, vertex table with dof tags,
    triangle table with neighbor indices and edge flags."""
    vid_map: dict[int, int] = {}
    lines = [_TRI_HEADER, f"scene {tri.scene.name}"]
    alive = [vid for vid, v in enumerate(tri.verts) if v.alive]
    lines.append(f"vertices {len(alive)}")
    for new, vid in enumerate(alive):
        vid_map[vid] = new
        v = tri.verts[vid]
        seg = v.seg if v.seg is not None else -1
        lines.append(f"{_fmt(v.x)} {_fmt(v.y)} {v.dof} {seg}")
    tids = list(tri.alive_tris())
    tid_map = {tid: k for k, tid in enumerate(tids)}
    lines.append(f"triangles {len(tids)}")
    for tid in tids:
        t = tri.tris[tid]
        vs = " ".join(str(vid_map[v]) for v in t.v)
        ns = " ".join(str(tid_map[n]) if n is not None else "-1" for n in t.nbr)
        fs = " ".join(str(f) for f in t.flag)
        lines.append(f"{vs} {ns} {fs}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_triangulation(path: str, scene: Scene) -> Triangulation:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != _TRI_HEADER:
        raise TriangulationError(f"not a triangulation file (expected {_TRI_HEADER!r})")
    tri = Triangulation(scene)
    k = 1
    if k < len(lines) and lines[k].startswith("scene "):
        k += 1
    if not lines[k].startswith("vertices "):
        raise TriangulationError(f"line {k + 1}: expected vertex section")
    nv = int(lines[k].split()[1])
    k += 1
    for _ in range(nv):
        x, y, dof, seg = lines[k].split()
        tri.add_vertex(float(x), float(y), int(dof), None if seg == "-1" else int(seg))
        k += 1
    if not lines[k].startswith("triangles "):
        raise TriangulationError(f"line {k + 1}: expected triangle section")
    nt = int(lines[k].split()[1])
    k += 1
    for _ in range(nt):
        parts = lines[k].split()
        v = [int(s) for s in parts[0:3]]
        nbr = [None if s == "-1" else int(s) for s in parts[3:6]]
        flag = [int(s) for s in parts[6:9]]
        tri._new_tri(*v, nbr=nbr, flag=flag)
        k += 1
    return tri


def write_triangle_files(tri: Triangulation, prefix: str) -> None:
    """Interop dump as .node/.ele/.poly text files.

    Vertex markers encode the dof class: 0 free, 1 fixed, 2+k on segment k.
    The .poly file lists every constrained edge with marker (segment id + 1).
    """
    alive = [vid for vid, v in enumerate(tri.verts) if v.alive]
    vid_map = {vid: k + 1 for k, vid in enumerate(alive)}  # 1-based ids
    with open(prefix + ".node", "w") as fh:
        fh.write(f"{len(alive)} 2 0 1\n")
        for vid in alive:
            v = tri.verts[vid]
            marker = 0 if v.dof == DOF_FREE else (1 if v.dof == DOF_FIXED else 2 + v.seg)
            fh.write(f"{vid_map[vid]} {_fmt(v.x)} {_fmt(v.y)} {marker}\n")
    tids = list(tri.alive_tris())
    with open(prefix + ".ele", "w") as fh:
        fh.write(f"{len(tids)} 3 0\n")
        for k, tid in enumerate(tids):
            t = tri.tris[tid]
            fh.write(f"{k + 1} {vid_map[t.v[0]]} {vid_map[t.v[1]]} {vid_map[t.v[2]]}\n")
    constrained = [(a, b, tri.tris[t].flag[i]) for t, i, a, b in tri.iter_edges()
                   if tri.tris[t].flag[i] != INTERNAL]
    with open(prefix + ".poly", "w") as fh:
        fh.write("0 2 0 1\n")
        fh.write(f"{len(constrained)} 1\n")
        for k, (a, b, f) in enumerate(constrained):
            fh.write(f"{k + 1} {vid_map[a]} {vid_map[b]} {f + 1}\n")
        fh.write("0\n")


class TriangleFormatError(TriangulationError):
    pass


def read_triangle_files(prefix: str, scene: Scene) -> Triangulation:
    """Rebuild a triangulation from .node/.ele/.poly files.

    Constrained edge flags are reconstructed from the .poly edge markers;
    neighbor links are recomputed from connectivity.
    """
    import os
    for ext in (".node", ".ele", ".poly"):
        if not os.path.exists(prefix + ext):
            raise TriangleFormatError(f"missing {ext} file at {prefix}{ext}")
    tri = Triangulation(scene)

    def rows(path: str):
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#")[0].strip()
                if line:
                    yield ln, line.split()

    node_rows = list(rows(prefix + ".node"))
    if not node_rows:
        raise TriangleFormatError(".node: empty file")
    ln, head = node_rows[0]
    try:
        nv = int(head[0])
    except (ValueError, IndexError):
        raise TriangleFormatError(f".node line {ln}: bad header")
    id_map: dict[int, int] = {}
    for ln, parts in node_rows[1:nv + 1]:
        if len(parts) < 3:
            raise TriangleFormatError(f".node line {ln}: expected 'id x y [marker]'")
        ext_id = int(parts[0])
        x, y = float(parts[1]), float(parts[2])
        marker = int(parts[3]) if len(parts) > 3 else 0
        if marker == 0:
            dof, seg = DOF_FREE, None
        elif marker == 1:
            dof, seg = DOF_FIXED, None
        else:
            dof, seg = DOF_ON_SEGMENT, marker - 2
        id_map[ext_id] = tri.add_vertex(x, y, dof, seg)
    ele_rows = list(rows(prefix + ".ele"))
    if not ele_rows:
        raise TriangleFormatError(".ele: empty file")
    ln, head = ele_rows[0]
    nt = int(head[0])
    for ln, parts in ele_rows[1:nt + 1]:
        if len(parts) < 4:
            raise TriangleFormatError(f".ele line {ln}: expected 'id v1 v2 v3'")
        v = [id_map[int(s)] for s in parts[1:4]]
        pts = [tri.pos(k) for k in v]
        if orient2d(*pts) is Orientation.NEGATIVE:
            v = [v[0], v[2], v[1]]
        tri._new_tri(*v)
    tri.rebuild_links()
    poly_rows = list(rows(prefix + ".poly"))
    if not poly_rows:
        raise TriangleFormatError(".poly: empty file")
    # First header row may be the vertex header (count 0 when nodes live in .node).
    idx = 1 if poly_rows[0][1][0] == "0" else 0
    ln, head = poly_rows[idx]
    ns = int(head[0])
    for ln, parts in poly_rows[idx + 1: idx + 1 + ns]:
        if len(parts) < 3:
            raise TriangleFormatError(f".poly line {ln}: expected 'id v1 v2 [marker]'")
        a, b = id_map[int(parts[1])], id_map[int(parts[2])]
        marker = int(parts[3]) if len(parts) > 3 else 1
        loc = tri.find_edge(a, b)
        if loc is None:
            raise TriangleFormatError(f".poly line {ln}: edge not present in mesh")
        tri.set_edge_flag(loc[0], loc[1], marker - 1)
    return tri
