"""Fuzzy-contraction objective for triangulation optimization.

The objective measures total edge length while counting edges shorter than a
contraction length ``eps`` as (fuzzily) collapsed: the two edges that would
merge when such an edge is contracted to a point are downweighted towards
1/2 each, and edges that would be merged more than twice are discarded by a
correction ramp. Two penalty terms discourage nearly-degenerate angles and
edges far below the working length scale.

contractibility rules applied here decide whether a short edge may count as
contracted at all; they mirror what the actual contraction operation can do
to the final topology.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .geometry import COLLINEAR_KAPPA, Point, collinearity_quality, point_segment_distance
from .trimesh import (DOF_FIXED, DOF_FREE, DOF_ON_SEGMENT, INTERNAL,
                      Triangulation)

DELTA_DEFAULT = math.cos(math.radians(179.0)) + 1.0  # ~1.523e-4


@dataclass
class ObjectiveParams:
    eps: float                      # contraction length (world units)
    eps0: float = 1e-10             # minimum-length penalty threshold
    delta: float = DELTA_DEFAULT    # angle-cosine penalty threshold
    mu_angle: float = 1.0
    mu_minlen: float = 10.0
    kappa: float = COLLINEAR_KAPPA  # collinearity critical value
    polish_mode: bool = False       # also penalize sharp angles
    fuzzy_enabled: bool = True      # False forces every edge weight to 1

    def __post_init__(self) -> None:
        if not (self.eps > 0.0):
            raise ValueError("eps must be positive")
        if self.eps0 > self.eps / 100.0:
            raise ValueError("eps0 must be at most eps/100")
        if not (self.delta > 0.0):
            raise ValueError("delta must be positive")
        if self.mu_angle < 0.0 or self.mu_minlen < 0.0:
            raise ValueError("penalty weights must be nonnegative")

    def with_eps(self, eps: float) -> "ObjectiveParams":
        return ObjectiveParams(eps, self.eps0, self.delta, self.mu_angle,
                               self.mu_minlen, self.kappa, self.polish_mode,
                               self.fuzzy_enabled)


@dataclass
class ObjectiveBreakdown:
    w_contractible: float
    angle_penalty: float
    minlen_penalty: float
    f_total: float


class ContractBlock(Enum):
    BOTH_FIXED = "both_fixed"
    DIFFERENT_SEGMENTS = "different_segments"
    CONDITIONING = "conditioning"
    TRAPPED_VERTICES = "trapped_vertices"
    ONE_HOP = "one_hop"


@dataclass
class VertexMoves:
    moves: list[tuple[int, float, float]]  # (vertex id, new x, new y)


@dataclass
class EdgeFlip:
    tri: int
    edge: int


# ----------------------------------------------------------------------
# scalar building blocks

def contraction_factor(length: float, contractible: bool, eps: float) -> float:
    """Linear ramp from 1/2 (zero length) to 1 (length >= eps); 1 when the
    edge cannot be contracted."""
    if not contractible:
        return 1.0
    return 0.5 + 0.5 * min(1.0, length / eps)


def multi_merge_correction(x: float) -> float:
    """0 on [0, 1/4], a linear ramp to 1 on [1/4, 1/2], 1 above."""
    if x < 0.25:
        return 0.0
    if x <= 0.5:
        return 4.0 * x - 1.0
    return 1.0


# ----------------------------------------------------------------------
# contractibility

def is_contractible(tri: Triangulation, t: int, i: int, params: ObjectiveParams,
                    _basic_only: bool = False) -> Optional[ContractBlock]:
    """Decide whether edge (t, i) may be treated as contractible.

    Returns None when contraction is allowed, otherwise the rule that blocks
    it. Rules are applied in order: locked endpoints, host-segment mismatch,
    conditioning of the post-merge triangles, flat triangles against a
    straight constrained chain, and indirect one-hop connections.
    """
    a, b = tri.edge_verts(t, i)
    va, vb = tri.verts[a], tri.verts[b]
    dof_a, dof_b = va.dof, vb.dof

    if dof_a == DOF_FIXED and dof_b == DOF_FIXED:
        return ContractBlock.BOTH_FIXED

    if dof_a != DOF_FREE and dof_b != DOF_FREE:
        if dof_a == DOF_ON_SEGMENT and dof_b == DOF_ON_SEGMENT:
            if va.seg != vb.seg:
                return ContractBlock.DIFFERENT_SEGMENTS
        else:
            fixed, onseg = (va, vb) if dof_a == DOF_FIXED else (vb, va)
            host = tri.scene.segments[onseg.seg]
            if point_segment_distance(fixed.pos, host.a, host.b) > 1e-9:
                return ContractBlock.DIFFERENT_SEGMENTS

    free_vid = cons_vid = None
    if dof_a == DOF_FREE and dof_b != DOF_FREE:
        free_vid, cons_vid = a, b
    elif dof_b == DOF_FREE and dof_a != DOF_FREE:
        free_vid, cons_vid = b, a
    # Triangles flattened against the straight chain through the contraction
    # target are adjudicated by the trapped-vertex rule below, not by the
    # blanket conditioning test (the flats vanish once the chain contracts).
    chains = None
    if free_vid is not None:
        chains = collinear_chains_through(tri, cons_vid, params.kappa)

    if _conditioning_blocks(tri, a, b, params, chains):
        return ContractBlock.CONDITIONING
    if _basic_only:
        return None

    if free_vid is not None and _flat_chain_blocks(tri, free_vid, cons_vid,
                                                   params, chains):
        return ContractBlock.TRAPPED_VERTICES

    if _one_hop_blocks(tri, a, b, params):
        return ContractBlock.ONE_HOP
    return None


def _merge_target(va, vb) -> tuple[int, Optional[int]]:
    """(dof, host segment) of the merged vertex."""
    if va.dof == vb.dof:
        return va.dof, va.seg
    low = va if va.dof < vb.dof else vb
    return low.dof, low.seg


def _conditioning_blocks(tri: Triangulation, a: int, b: int,
                         params: ObjectiveParams,
                         exempt_chains: Optional[list[list[int]]] = None) -> bool:
    va, vb = tri.verts[a], tri.verts[b]
    tdof, tseg = _merge_target(va, vb)
    if tdof == DOF_FREE:
        return False  # merged vertex stays free; every triangle keeps 2 dof
    chain_sets = [set(c) for c in exempt_chains] if exempt_chains else []
    shared = tri.v2t[a] & tri.v2t[b]
    if va.dof == vb.dof:
        affected = (tri.v2t[a] | tri.v2t[b]) - shared
    else:
        high = a if va.dof > vb.dof else b
        affected = tri.v2t[high] - shared
    kappa = params.kappa
    segs = tri.scene.segments
    merged_pos = None
    if tdof == DOF_FIXED:
        merged_pos = va.pos if va.dof == DOF_FIXED else vb.pos
    for tid in affected:
        fixed: list = []
        hosts: list = []
        has_free = False
        others: list[int] = []
        for vid in tri.tris[tid].v:
            if vid in (a, b):
                if tdof == DOF_FIXED:
                    fixed.append(merged_pos)
                else:
                    hosts.append(segs[tseg])
                continue
            others.append(vid)
            v = tri.verts[vid]
            if v.dof == DOF_FREE:
                has_free = True
                break
            if v.dof == DOF_FIXED:
                fixed.append(v.pos)
            else:
                hosts.append(segs[v.seg])
        if has_free:
            continue
        if chain_sets and len(others) == 2 and \
                any(others[0] in cs and others[1] in cs for cs in chain_sets):
            continue  # flat-on-chain triangle; the trapped-vertex rule decides
        if len(fixed) == 3:
            if collinearity_quality(*fixed) < kappa:
                return True
        elif len(fixed) == 2:
            s = hosts[0]
            mid = s.point_at(0.5)
            if all(collinearity_quality(fixed[0], fixed[1], p) < kappa
                   for p in (s.a, s.b, mid)):
                return True
        elif len(fixed) == 1:
            s1, s2 = hosts
            if _segments_collinear(s1, s2, kappa) and \
                    collinearity_quality(s1.a, s1.b, fixed[0]) < kappa:
                return True
        else:
            s1, s2, s3 = hosts
            if _segments_collinear(s1, s2, kappa) and _segments_collinear(s1, s3, kappa):
                return True
    return False


def _segments_collinear(s1, s2, kappa: float) -> bool:
    if s1 is s2:
        return True
    return (collinearity_quality(s1.a, s1.b, s2.a) < kappa
            and collinearity_quality(s1.a, s1.b, s2.b) < kappa)


def collinear_chains_through(tri: Triangulation, vid: int,
                             kappa: float = COLLINEAR_KAPPA) -> list[list[int]]:
    """Maximal near-collinear runs of constrained edges passing through vid.

    Each chain is an ordered vertex list containing vid. Arms that join at
    vid with a straight (collinear) angle are paired into one chain; arms
    with no straight partner extend as half-chains.
    """
    arms = [nb for nb, _ in tri.constrained_partners(vid)]
    if not arms:
        return []

    def extend(prev: int, cur: int) -> list[int]:
        run = [cur]
        seen = {prev, cur}
        while True:
            nxt = None
            for nb, _ in tri.constrained_partners(cur):
                if nb in seen:
                    continue
                if collinearity_quality(tri.pos(prev), tri.pos(cur), tri.pos(nb)) < kappa:
                    nxt = nb
                    break
            if nxt is None:
                return run
            run.append(nxt)
            seen.add(nxt)
            prev, cur = cur, nxt

    chains = []
    used = set()
    p0 = tri.pos(vid)
    for k, arm in enumerate(arms):
        if arm in used:
            continue
        partner = None
        for other in arms[k + 1:]:
            if other in used:
                continue
            if collinearity_quality(tri.pos(arm), p0, tri.pos(other)) < kappa:
                partner = other
                break
        left = extend(vid, arm)[::-1]
        if partner is not None:
            used.add(arm)
            used.add(partner)
            right = extend(vid, partner)
            chains.append(left + [vid] + right)
        else:
            used.add(arm)
            chains.append(left + [vid])
    return chains


def _flat_chain_blocks(tri: Triangulation, free_vid: int, cons_vid: int,
                       params: ObjectiveParams,
                       chains: Optional[list[list[int]]] = None) -> bool:
    """Pulling free_vid onto cons_vid flattens the triangles that connect it
    to the straight constrained chain through cons_vid; each such trapped
    vertex must be able to contract away along the chain."""
    if chains is None:
        chains = collinear_chains_through(tri, cons_vid, params.kappa)
    if not chains:
        return False
    nbrs_free = tri.vertex_neighbors(free_vid)
    shared = tri.v2t[free_vid] & tri.v2t[cons_vid]
    apexes = set()
    for tid in shared:
        apexes.update(tri.tris[tid].v)
    apexes -= {free_vid, cons_vid}
    eps = params.eps

    for chain in chains:
        j = chain.index(cons_vid)
        trapped = [v for v in chain if v in nbrs_free and v != cons_vid
                   and v not in apexes]
        if not trapped:
            continue
        # Sub-edge k joins chain[k] and chain[k+1]; it is "removable" when it
        # is shorter than eps and nothing fundamental blocks contracting it.
        removable = []
        for k in range(len(chain) - 1):
            x, y = chain[k], chain[k + 1]
            px, py = tri.pos(x), tri.pos(y)
            short = math.hypot(px.x - py.x, px.y - py.y) < eps
            ok = False
            if short:
                loc = tri.find_edge(x, y)
                ok = loc is not None and \
                    is_contractible(tri, loc[0], loc[1], params, _basic_only=True) is None
            removable.append(ok)
        for u in trapped:
            ku = chain.index(u)
            path_to_target = range(min(ku, j), max(ku, j))
            to_target = all(removable[k] for k in path_to_target)
            if ku < j:
                to_end = all(removable[k] for k in range(0, ku))
            else:
                to_end = all(removable[k] for k in range(ku, len(chain) - 1))
            if not (to_target or to_end):
                return True
    return False


def _one_hop_blocks(tri: Triangulation, a: int, b: int,
                    params: ObjectiveParams) -> bool:
    """A vertex connected to both endpoints outside the shared triangles makes
    the merge fold triangles onto each other, unless it sits within eps of a
    shared-triangle apex (then the whole cluster reads as one point)."""
    shared = tri.v2t[a] & tri.v2t[b]
    apexes = set()
    for tid in shared:
        apexes.update(tri.tris[tid].v)
    apexes -= {a, b}
    if not apexes:
        return True
    common = (tri.vertex_neighbors(a) & tri.vertex_neighbors(b)) - apexes - {a, b}
    if not common:
        return False
    apex_pos = [tri.pos(v) for v in apexes]
    eps = params.eps
    for h in common:
        ph = tri.pos(h)
        if min(math.hypot(ph.x - p.x, ph.y - p.y) for p in apex_pos) > eps:
            return True
    return False


# ----------------------------------------------------------------------
# evaluation

class _Cache:
    __slots__ = ("c", "blocked")

    def __init__(self):
        self.c: dict[tuple[int, int], float] = {}
        self.blocked: dict[tuple[int, int], bool] = {}


def _c_of(tri: Triangulation, t: int, i: int, params: ObjectiveParams,
          cache: _Cache) -> float:
    a, b = tri.edge_verts(t, i)
    key = (a, b) if a < b else (b, a)
    got = cache.c.get(key)
    if got is not None:
        return got
    va, vb = tri.verts[a], tri.verts[b]
    length = math.hypot(vb.x - va.x, vb.y - va.y)
    if length >= params.eps:
        val = 1.0
    else:
        blocked = cache.blocked.get(key)
        if blocked is None:
            blocked = is_contractible(tri, t, i, params) is not None
            cache.blocked[key] = blocked
        val = 1.0 if blocked else 0.5 + 0.5 * (length / params.eps)
    cache.c[key] = val
    return val


def edge_weight(tri: Triangulation, t: int, i: int, params: ObjectiveParams,
                cache: Optional[_Cache] = None) -> float:
    """Fuzzy weight of edge (t, i): the product of the contraction factors of
    its neighboring edges, zeroed by the multi-merge correction when two or
    more of them are contracted."""
    if not params.fuzzy_enabled:
        return 1.0
    if cache is None:
        cache = _Cache()
    prod = 1.0
    sides = [(t, i)]
    m = tri.mirror(t, i)
    if m is not None:
        sides.append(m)
    for st, si in sides:
        for k in range(3):
            if k != si:
                prod *= _c_of(tri, st, k, params, cache)
    return prod * multi_merge_correction(prod)


def contractible_weight(tri: Triangulation, params: ObjectiveParams) -> float:
    """Weighted total edge length (the fuzzy-contraction part of the objective)."""
    cache = _Cache()
    total = 0.0
    for t, i, a, b in tri.iter_edges():
        va, vb = tri.verts[a], tri.verts[b]
        length = math.hypot(vb.x - va.x, vb.y - va.y)
        total += edge_weight(tri, t, i, params, cache) * length
    return total


def _angle_term(tri: Triangulation, tid: int, params: ObjectiveParams) -> float:
    t = tri.tris[tid]
    cosines = tri.tri_angles_cos(tid)
    total = 0.0
    delta = params.delta
    for k in range(3):
        # Angles held entirely by original-geometry edges are immutable.
        if t.flag[(k + 1) % 3] != INTERNAL and t.flag[(k + 2) % 3] != INTERNAL:
            continue
        x = cosines[k]
        total += max(0.0, -1.0 + delta - x) / delta
        if params.polish_mode:
            total += max(0.0, x - (1.0 - delta)) / delta
    return total


def angle_penalty(tri: Triangulation, params: ObjectiveParams) -> float:
    """Penalty for angles approaching 180 degrees (plus, in polish mode, for
    angles approaching 0)."""
    return sum(_angle_term(tri, tid, params) for tid in tri.alive_tris())


def minlen_penalty(tri: Triangulation, params: ObjectiveParams) -> float:
    """Penalty for edges shorter than eps0."""
    eps0 = params.eps0
    total = 0.0
    for _, _, a, b in tri.iter_edges():
        va, vb = tri.verts[a], tri.verts[b]
        length = math.hypot(vb.x - va.x, vb.y - va.y)
        if length < eps0:
            total += (eps0 - length) / eps0
    return total


def objective(tri: Triangulation, params: ObjectiveParams) -> ObjectiveBreakdown:
    wc = contractible_weight(tri, params)
    ang = angle_penalty(tri, params)
    mlen = minlen_penalty(tri, params)
    return ObjectiveBreakdown(wc, ang, mlen,
                              wc + params.mu_angle * ang + params.mu_minlen * mlen)


# ----------------------------------------------------------------------
# incremental evaluation

def local_objective(tri: Triangulation, params: ObjectiveParams,
                    pairs: Iterable[tuple[int, int]],
                    angle_tris: Iterable[int]) -> float:
    """Objective restricted to the given edges and triangles.

    Pairs that do not currently exist as edges contribute nothing, which lets
    one local set serve both sides of a topology-changing edit.
    """
    cache = _Cache()
    total = 0.0
    eps0 = params.eps0
    for a, b in pairs:
        if not (tri.verts[a].alive and tri.verts[b].alive):
            continue
        loc = tri.find_edge(a, b)
        if loc is None:
            continue
        va, vb = tri.verts[a], tri.verts[b]
        length = math.hypot(vb.x - va.x, vb.y - va.y)
        w = edge_weight(tri, loc[0], loc[1], params, cache)
        total += w * length
        if length < eps0:
            total += params.mu_minlen * (eps0 - length) / eps0
    for tid in angle_tris:
        if tri.tris[tid] is not None:
            total += params.mu_angle * _angle_term(tri, tid, params)
    return total


def move_region(tri: Triangulation, moved: Iterable[int],
                params: ObjectiveParams) -> tuple[set[tuple[int, int]], set[int]]:
    """Edges and triangles whose objective terms a move of `moved` can change.

    Covers the second ring (an edge's weight sees its triangle-mates' lengths)
    and whole constrained chains through moved on-segment vertices (their
    sub-edge lengths feed the flat-chain contractibility rule).
    """
    seeds = set(moved)
    grown = set(seeds)
    for v in seeds:
        grown |= tri.vertex_neighbors(v)
        if tri.verts[v].dof == DOF_ON_SEGMENT:
            for chain in collinear_chains_through(tri, v, params.kappa):
                grown.update(chain)
    tids: set[int] = set()
    for v in grown:
        tids |= tri.v2t[v]
    pairs: set[tuple[int, int]] = set()
    for tid in tids:
        t = tri.tris[tid]
        for k in range(3):
            a, b = t.v[(k + 1) % 3], t.v[(k + 2) % 3]
            pairs.add((a, b) if a < b else (b, a))
    angle_tris: set[int] = set()
    for v in seeds:
        angle_tris |= tri.v2t[v]
    return pairs, angle_tris


def flip_region(tri: Triangulation, quad: Iterable[int],
                params: ObjectiveParams) -> tuple[set[tuple[int, int]], set[int]]:
    """Like move_region, for the four corners of a flipped quad. A flip
    rewires adjacency, which can shift conditioning verdicts along any
    constrained chain through a quad corner, so those chains are included."""
    grown = set(quad)
    for v in set(quad):
        grown |= tri.vertex_neighbors(v)
        if tri.verts[v].dof != DOF_FREE:
            for chain in collinear_chains_through(tri, v, params.kappa):
                grown.update(chain)
                for c in chain:
                    grown |= tri.vertex_neighbors(c)
    tids: set[int] = set()
    for v in grown:
        tids |= tri.v2t[v]
    pairs: set[tuple[int, int]] = set()
    for tid in tids:
        t = tri.tris[tid]
        for k in range(3):
            a, b = t.v[(k + 1) % 3], t.v[(k + 2) % 3]
            pairs.add((a, b) if a < b else (b, a))
    return pairs, set(tids)


def delta_objective(tri: Triangulation, edit, params: ObjectiveParams) -> float:
    """Exact objective change for a reversible edit, computed from local terms
    only. The triangulation is restored before returning."""
    if isinstance(edit, VertexMoves):
        if not edit.moves:
            return 0.0
        moved = [vid for vid, _, _ in edit.moves]
        pairs, angle_tris = move_region(tri, moved, params)
        before = local_objective(tri, params, pairs, angle_tris)
        old = [(vid, tri.verts[vid].x, tri.verts[vid].y) for vid in moved]
        for vid, x, y in edit.moves:
            tri.verts[vid].x = x
            tri.verts[vid].y = y
        after = local_objective(tri, params, pairs, angle_tris)
        for vid, x, y in old:
            tri.verts[vid].x = x
            tri.verts[vid].y = y
        return after - before
    if isinstance(edit, EdgeFlip):
        from .trimesh import FlipResult
        t, i = edit.tri, edit.edge
        p = tri.tris[t].v[i]
        a, b = tri.edge_verts(t, i)
        m = tri.mirror(t, i)
        if m is None:
            return 0.0
        q = tri.tris[m[0]].v[m[1]]
        quad = (p, a, q, b)
        pairs0, tris0 = flip_region(tri, quad, params)
        if tri.flip_edge(t, i) is not FlipResult.FLIPPED:
            return 0.0
        pairs1, tris1 = flip_region(tri, quad, params)
        pairs = pairs0 | pairs1
        atris = tris0 | tris1
        after = local_objective(tri, params, pairs, atris)
        back = tri.find_edge(p, q)
        res = tri.flip_edge(back[0], back[1])
        assert res is FlipResult.FLIPPED
        before = local_objective(tri, params, pairs, atris)
        return after - before
    raise TypeError(f"unsupported edit {type(edit).__name__}")
