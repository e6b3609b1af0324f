"""Synthetic scene families: random lines, grass, hair, and the illustrative
line-over-curve scene.

Every generator is a pure function of its parameters and seed; the same
inputs produce byte-identical scene files.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .geometry import Point, Segment, SegmentKind, segments_cross
from .scene import Scene, unit_square_boundary


class GenerationError(RuntimeError):
    def __init__(self, message: str, achieved: int = 0):
        super().__init__(message)
        self.achieved = achieved


def _clip_unit_square(a: Point, b: Point) -> Optional[tuple[Point, Point]]:
    t0, t1 = 0.0, 1.0
    dx, dy = b.x - a.x, b.y - a.y
    for o, d in ((a.x, dx), (a.y, dy)):
        if d == 0.0:
            if o < 0.0 or o > 1.0:
                return None
            continue
        ta, tb = (0.0 - o) / d, (1.0 - o) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 >= t1:
            return None
    def snap(v: float) -> float:
        return 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)

    pa = Point(snap(a.x + t0 * dx), snap(a.y + t0 * dy))
    pb = Point(snap(a.x + t1 * dx), snap(a.y + t1 * dy))
    if pa == pb:
        return None
    return pa, pb


def _crosses_any(seg: Segment, accepted: list[Segment]) -> bool:
    return any(segments_cross(seg, s) for s in accepted)


ORIENTATIONS = ("vertical", "uniform", "diagonal")
_JITTER = math.radians(10.0)


def gen_lines(n: int, orientation: str = "uniform", length_factor: float = 1.0,
              seed: int = 0) -> Scene:
    """n non-crossing segments with centers uniform in the unit square.

    Base length is 0.95/sqrt(n) scaled by length_factor and clamped to 0.95;
    orientation is mostly-vertical, fully uniform, or mostly-diagonal
    (+-10 degrees of jitter for the preferred orientations). Segments are
    clipped to the square and crossing candidates are resampled.
    """
    if n < 1 or length_factor <= 0.0:
        raise ValueError("need n >= 1 and length_factor > 0")
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    rng = np.random.default_rng(seed)
    length = min(0.95, 0.95 / math.sqrt(n) * length_factor)
    segs: list[Segment] = []
    budget = 400 * n + 100
    while len(segs) < n and budget > 0:
        budget -= 1
        cx, cy = rng.random(), rng.random()
        if orientation == "vertical":
            theta = math.pi / 2 + rng.uniform(-_JITTER, _JITTER)
        elif orientation == "diagonal":
            theta = math.pi / 4 + rng.uniform(-_JITTER, _JITTER)
        else:
            theta = rng.uniform(0.0, math.pi)
        hx, hy = 0.5 * length * math.cos(theta), 0.5 * length * math.sin(theta)
        clipped = _clip_unit_square(Point(cx - hx, cy - hy), Point(cx + hx, cy + hy))
        if clipped is None:
            continue
        seg = Segment(*clipped)
        if seg.length < 1e-6 or _crosses_any(seg, segs):
            continue
        segs.append(seg)
    if len(segs) < n:
        raise GenerationError(
            f"line scene too dense: placed {len(segs)} of {n}", achieved=len(segs))
    return Scene(segs + unit_square_boundary(),
                 name=f"lines-n{n}-{orientation}-f{length_factor:g}-s{seed}",
                 provenance=f"gen_lines(n={n}, orientation={orientation!r}, "
                            f"length_factor={length_factor!r}, seed={seed})")


def gen_grass(n: int, segments_per_leaf: int = 3, seed: int = 0) -> Scene:
    """n non-intersecting polyline leaves rooted on the bottom edge.

    Each leaf rises in segments_per_leaf steps with lateral sway drawn
    uniformly from +-0.2 of the step length; roots are stratified across the
    width and a leaf's sway is confined to its own lane so dense scenes stay
    crossing-free at any n. The enclosure keeps a 5% margin beyond the tight
    horizontal/top bounding box, roots staying on y=0.
    """
    if n < 1 or segments_per_leaf < 1:
        raise ValueError("need n >= 1 and segments_per_leaf >= 1")
    rng = np.random.default_rng(seed)
    leaves: list[list[Point]] = []
    all_segs: list[Segment] = []
    lane = 1.0 / n
    budget = 400 * n + 100
    while len(leaves) < n and budget > 0:
        budget -= 1
        k = len(leaves)
        lo, hi = k * lane, (k + 1) * lane
        pad = 0.06 * lane
        x0 = rng.uniform(lo + 0.1 * lane, hi - 0.1 * lane)
        height = rng.uniform(0.75, 0.92)
        step = height / segments_per_leaf
        pts = [Point(x0, 0.0)]
        ok = True
        for _ in range(segments_per_leaf):
            sway = rng.uniform(-0.2, 0.2) * step
            nx = min(max(pts[-1].x + sway, lo + pad), hi - pad)
            ny = pts[-1].y + step
            if not (0.0 <= nx <= 1.0):
                ok = False
                break
            pts.append(Point(nx, ny))
        if not ok:
            continue
        cand = [Segment(pts[k2], pts[k2 + 1]) for k2 in range(len(pts) - 1)]
        if any(_crosses_any(c, all_segs) for c in cand):
            continue
        # Non-adjacent self intersections within the leaf.
        self_bad = any(segments_cross(cand[i], cand[j])
                       for i in range(len(cand)) for j in range(i + 2, len(cand)))
        if self_bad:
            continue
        leaves.append(pts)
        all_segs.extend(cand)
    if len(leaves) < n:
        raise GenerationError(
            f"grass scene too dense: placed {len(leaves)} of {n}", achieved=len(leaves))
    # 5% margins left/right/top; roots stay exactly on the bottom edge.
    xs = [p.x for leaf in leaves for p in leaf]
    ys = [p.y for leaf in leaves for p in leaf]
    x0, x1, y1 = min(xs), max(xs), max(ys)
    sx = 0.90 / max(x1 - x0, 1e-9)
    sy = 0.95 / max(y1, 1e-9)
    segs = []
    for leaf in leaves:
        mapped = [Point(0.05 + (p.x - x0) * sx, p.y * sy) for p in leaf]
        mapped[0] = Point(mapped[0].x, 0.0)
        segs.extend(Segment(mapped[k], mapped[k + 1]) for k in range(len(mapped) - 1))
    return Scene(segs + unit_square_boundary(),
                 name=f"grass-n{n}-spl{segments_per_leaf}-s{seed}",
                 provenance=f"gen_grass(n={n}, segments_per_leaf={segments_per_leaf}, "
                            f"seed={seed})")


HAIR_CLEAR_CENTER = Point(0.5, 0.45)
HAIR_CLEAR_RADIUS = 0.15


def gen_hair(n_per_side: int, segments_per_strand: int = 5, seed: int = 0) -> Scene:
    """Strands attached to the left and right square sides (n per side),
    curving inward and downward as short circular-arc polylines, leaving a
    disk around HAIR_CLEAR_CENTER free of geometry."""
    if n_per_side < 1 or segments_per_strand < 1:
        raise ValueError("need n_per_side >= 1 and segments_per_strand >= 1")
    rng = np.random.default_rng(seed)
    all_segs: list[Segment] = []
    placed = 0
    want = 2 * n_per_side
    budget = 600 * want + 200
    clear_r2 = (HAIR_CLEAR_RADIUS + 0.02) ** 2

    def clear(p: Point) -> bool:
        return ((p.x - HAIR_CLEAR_CENTER.x) ** 2
                + (p.y - HAIR_CLEAR_CENTER.y) ** 2) > clear_r2

    while placed < want and budget > 0:
        budget -= 1
        side = placed % 2          # alternate left/right for balance
        y0 = rng.uniform(0.25, 0.95)
        length = rng.uniform(0.3, 0.45)
        step = length / segments_per_strand
        theta = rng.uniform(-0.25, 0.15)       # initial heading off horizontal
        turn = -rng.uniform(0.25, 0.55)        # bend downward per step
        x = 0.0 if side == 0 else 1.0
        sgn = 1.0 if side == 0 else -1.0
        pts = [Point(x, y0)]
        ok = True
        for k in range(segments_per_strand):
            theta += turn * (k > 0)
            nx = pts[-1].x + sgn * step * math.cos(theta)
            ny = pts[-1].y + step * math.sin(theta)
            p = Point(nx, ny)
            if not (0.0 <= nx <= 1.0 and 0.02 <= ny <= 1.0) or not clear(p):
                ok = False
                break
            pts.append(p)
        if not ok:
            continue
        cand = [Segment(pts[k], pts[k + 1]) for k in range(len(pts) - 1)]
        if any(not clear(s.point_at(u)) for s in cand for u in (0.25, 0.5, 0.75)):
            continue
        if any(_crosses_any(c, all_segs) for c in cand):
            continue
        if any(segments_cross(cand[i], cand[j])
               for i in range(len(cand)) for j in range(i + 2, len(cand))):
            continue
        all_segs.extend(cand)
        placed += 1
    if placed < want:
        raise GenerationError(
            f"hair scene too dense: placed {placed} of {want}", achieved=placed)
    return Scene(all_segs + unit_square_boundary(),
                 name=f"hair-n{n_per_side}-sps{segments_per_strand}-s{seed}",
                 provenance=f"gen_hair(n_per_side={n_per_side}, "
                            f"segments_per_strand={segments_per_strand}, seed={seed})")


def gen_line_over_curve(curve_segments: int = 24, two_lines: bool = False,
                        line_gap: float = 0.03, amplitude: float = 0.12,
                        seed: int = 0) -> Scene:
    """One (or two closely spaced) long horizontal segments over a segmented
    curved chain: the classic scene where angle-driven refinement wastes edge
    length between close parallel lines."""
    rng = np.random.default_rng(seed)
    segs = [Segment(Point(0.05, 0.75), Point(0.95, 0.75))]
    if two_lines:
        y2 = 0.75 + line_gap
        segs.append(Segment(Point(0.05, y2), Point(0.95, y2)))
    xs = np.linspace(0.05, 0.95, curve_segments + 1)
    ys = 0.22 + amplitude * np.sin(np.pi * (xs - 0.05) / 0.9) \
        + rng.uniform(-0.004, 0.004, size=len(xs))
    pts = [Point(float(x), float(y)) for x, y in zip(xs, ys)]
    segs.extend(Segment(pts[k], pts[k + 1]) for k in range(len(pts) - 1))
    return Scene(segs + unit_square_boundary(),
                 name=f"line-over-curve-{'2' if two_lines else '1'}-c{curve_segments}-s{seed}",
                 provenance=f"gen_line_over_curve(curve_segments={curve_segments}, "
                            f"two_lines={two_lines}, line_gap={line_gap!r}, "
                            f"amplitude={amplitude!r}, seed={seed})")
