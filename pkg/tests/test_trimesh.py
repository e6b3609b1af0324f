import math
import random

import pytest

from conftest import random_segment_scene
from mintri.geometry import Point, Segment, incircle
from mintri.scene import Scene, SceneError
from mintri.trimesh import (DOF_FIXED, DOF_FREE, DOF_ON_SEGMENT, INTERNAL,
                            ContractBlock, FlipResult, RefinementOverflowError,
                            Triangulation, TriangulationError, TriangleFormatError,
                            build_cdt, load_triangulation, optimal_refined_cdt,
                            read_triangle_files, refine_cdt, save_triangulation,
                            write_triangle_files)


def test_cdt_empty_square():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    assert t.num_tris == 2
    assert t.num_verts == 4
    assert sum(1 for _ in t.iter_edges()) == 5
    assert t.total_edge_length() == pytest.approx(4 + math.sqrt(2), rel=1e-12)
    assert t.validate_topology() == []


def test_cdt_interior_diagonal_constrained():
    seg = Segment(Point(0.2, 0.2), Point(0.8, 0.8))
    t = build_cdt(Scene.from_geometry([seg], normalize=False))
    flags = [t.tris[tid].flag[i] for tid, i, _, _ in t.iter_edges()]
    assert 0 in flags  # the segment id appears as a constrained edge
    assert t.validate_topology() == []


def test_cdt_rejects_crossings():
    segs = [Segment(Point(0.2, 0.2), Point(0.8, 0.8)),
            Segment(Point(0.2, 0.8), Point(0.8, 0.2))]
    with pytest.raises(SceneError):
        build_cdt(Scene(segs, "bad").__class__(
            segs + Scene.from_geometry([], validate=False).segments, "bad"))


def test_cdt_empty_circumcircle_property():
    # Oracle: per-edge in-circle check on every unconstrained edge.
    scene = random_segment_scene(20, seed=3)
    t = build_cdt(scene)
    assert t.validate_topology() == []
    for tid, i, a, b in t.iter_edges():
        if t.tris[tid].flag[i] != INTERNAL:
            continue
        m = t.mirror(tid, i)
        if m is None:
            continue
        q = t.tris[m[0]].v[m[1]]
        v = t.tris[tid].v
        det = incircle(t.pos(v[0]), t.pos(v[1]), t.pos(v[2]), t.pos(q))
        assert det <= 1e-10, (tid, i, det)


def test_cdt_vertex_on_boundary_chain():
    # A root vertex sits exactly on the bottom boundary side.
    segs = [Segment(Point(0.4, 0.0), Point(0.45, 0.6))]
    t = build_cdt(Scene.from_geometry(segs, normalize=False))
    assert t.validate_topology() == []


def test_refine_noop_when_conforming():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    r = refine_cdt(t, 0.0, math.inf)
    assert r.num_verts == t.num_verts and r.num_tris == t.num_tris


def test_refine_min_angle_reached():
    # Oracle: exhaustive angle scan of the refined mesh.
    segs = [Segment(Point(0.5, 0.0), Point(0.52, 0.4)),
            Segment(Point(0.52, 0.4), Point(0.49, 0.8))]
    t = build_cdt(Scene.from_geometry(segs, normalize=False))
    r = refine_cdt(t, 25.0, math.inf)
    assert r.validate_topology() == []
    for tid in r.alive_tris():
        cosines = r.tri_angles_cos(tid)
        worst = max(range(3), key=lambda k: cosines[k])
        ang = math.degrees(math.acos(max(-1.0, min(1.0, cosines[worst]))))
        if ang < 25.0 - 1e-9:
            flags = r.tris[tid].flag
            # Only angles forced between two constrained edges may stay small.
            assert flags[(worst + 1) % 3] != INTERNAL
            assert flags[(worst + 2) % 3] != INTERNAL


def test_refine_max_area():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    r = refine_cdt(t, 0.0, 0.05)
    assert all(r.tri_area(tid) <= 0.05 + 1e-12 for tid in r.alive_tris())
    assert r.validate_topology() == []


def test_refine_splits_thin_gap_between_parallel_segments():
    # Two closely spaced horizontal segments force slender triangles whose
    # angles pull in Steiner vertices once a minimum angle is demanded.
    segs = [Segment(Point(0.1, 0.5), Point(0.9, 0.5)),
            Segment(Point(0.1, 0.53), Point(0.9, 0.53))]
    base = build_cdt(Scene.from_geometry(segs, normalize=False))
    refined = refine_cdt(base, 25.0, math.inf)
    assert refined.num_verts > base.num_verts
    assert refined.validate_topology() == []


def test_refine_angle_cap():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    with pytest.raises(ValueError):
        refine_cdt(t, 34.0, math.inf)


def test_optimal_refined_cdt_is_min_over_grid(small_scene):
    base = build_cdt(small_scene)
    angles = [0.0, 15.0, 25.0]
    areas = [math.inf, 0.05, 0.02]
    lengths = []
    for ang in angles:
        for area in areas:
            lengths.append(refine_cdt(base, ang, area).total_edge_length())
    best = optimal_refined_cdt(small_scene, angles, areas)
    assert best.total_edge_length() == pytest.approx(min(lengths), rel=1e-12)
    assert best.total_edge_length() <= base.total_edge_length() + 1e-12


def test_optimal_refined_cdt_requires_norefine_cell(small_scene):
    with pytest.raises(ValueError):
        optimal_refined_cdt(small_scene, [5.0], [math.inf])
    with pytest.raises(ValueError):
        optimal_refined_cdt(small_scene, [0.0], [0.1])


def test_flip_involution_and_rejections():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    diag = next(e for e in t.iter_edges() if t.tris[e[0]].flag[e[1]] == INTERNAL)
    edges_before = sorted((min(a, b), max(a, b)) for _, _, a, b in t.iter_edges())
    assert t.flip_edge(diag[0], diag[1]) is FlipResult.FLIPPED
    edges_mid = sorted((min(a, b), max(a, b)) for _, _, a, b in t.iter_edges())
    assert edges_mid != edges_before
    assert t.validate_topology() == []
    new_diag = next(e for e in t.iter_edges() if t.tris[e[0]].flag[e[1]] == INTERNAL)
    assert t.flip_edge(new_diag[0], new_diag[1]) is FlipResult.FLIPPED
    edges_after = sorted((min(a, b), max(a, b)) for _, _, a, b in t.iter_edges())
    assert edges_after == edges_before
    # Constrained edges refuse to flip.
    seg_edge = next(e for e in t.iter_edges() if t.tris[e[0]].flag[e[1]] != INTERNAL)
    assert t.flip_edge(seg_edge[0], seg_edge[1]) is FlipResult.REJECTED_CONSTRAINED


def test_flip_rejects_nonconvex_on_straight_constrained_chain():
    # A vertex splitting a straight constrained segment: the quad through it
    # is flat on one side, so the flip must be refused despite both triangles
    # being valid.
    seg = Segment(Point(0.2, 0.5), Point(0.8, 0.5))
    t = build_cdt(Scene.from_geometry([seg], normalize=False))
    mid = t.split_edge(*t.find_edge(4, 5), Point(0.5, 0.5), DOF_ON_SEGMENT, 0)
    assert t.validate_topology() == []
    # Find an internal edge at `mid` whose quad has the flat corner.
    rejected = 0
    for tid in list(t.v2t[mid]):
        tri = t.tris[tid]
        for i in range(3):
            if mid in t.edge_verts(tid, i) and tri.flag[i] == INTERNAL \
                    and tri.nbr[i] is not None:
                if t.flip_edge(tid, i) is FlipResult.REJECTED_NOT_CONVEX:
                    rejected += 1
    assert rejected > 0
    assert t.validate_topology() == []


def test_flip_fuzz_keeps_topology_valid():
    scene = random_segment_scene(8, seed=5)
    t = refine_cdt(build_cdt(scene), 20.0, 0.05)
    rng = random.Random(0)
    flips = 0
    for k in range(2000):
        tid = rng.randrange(len(t.tris))
        if t.tris[tid] is None:
            continue
        if t.flip_edge(tid, rng.randrange(3)) is FlipResult.FLIPPED:
            flips += 1
            if flips % 64 == 0:
                assert t.validate_topology() == []
    assert flips > 100
    assert t.validate_topology() == []


def test_subdivide_counts_and_flags():
    seg = Segment(Point(0.25, 0.25), Point(0.75, 0.75))
    t = build_cdt(Scene.from_geometry([seg], normalize=False))
    s = t.subdivide()
    assert s.num_tris == 4 * t.num_tris
    n_edges = sum(1 for _ in t.iter_edges())
    assert s.num_verts == t.num_verts + n_edges
    assert s.validate_topology() == []
    # Constrained midpoints ride their host segment.
    hosts = [v for v in s.verts if v.alive and v.dof == DOF_ON_SEGMENT]
    assert hosts and all(v.seg is not None for v in hosts)


def test_subdivide_square_counts():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    s = t.subdivide()
    assert s.num_tris == 8
    assert s.num_verts == 9


def test_subdivide_length_identity():
    # Midsegment theorem: each triangle contributes half its perimeter of new
    # midsegments, so the subdivided total is 2L - B/2 (B = boundary length).
    for seed in (1, 2, 3):
        scene = random_segment_scene(10, seed=seed)
        t = refine_cdt(build_cdt(scene), 15.0, math.inf)
        s = t.subdivide()
        expect = 2.0 * t.total_edge_length() - 0.5 * t.boundary_edge_length()
        assert s.total_edge_length() == pytest.approx(expect, rel=1e-12)


def test_contract_free_free_midpoint():
    scene = random_segment_scene(6, seed=9)
    t = refine_cdt(build_cdt(scene), 22.0, 0.03)
    target = None
    for tid, i, a, b in t.iter_edges():
        if t.verts[a].dof == DOF_FREE and t.verts[b].dof == DOF_FREE:
            target = (tid, i, a, b)
            break
    assert target is not None
    tid, i, a, b = target
    pa, pb = t.pos(a), t.pos(b)
    before = t.num_tris
    res = t.contract_edge(tid, i)
    assert res.ok
    assert t.num_tris == before - 2
    merged = t.pos(res.survivor)
    assert merged == pytest.approx(Point((pa.x + pb.x) / 2, (pa.y + pb.y) / 2), abs=1e-12)
    assert t.validate_topology() == []


def test_contract_fixed_absorbs():
    seg = Segment(Point(0.3, 0.4), Point(0.7, 0.6))
    t = build_cdt(Scene.from_geometry([seg], normalize=False))
    r = refine_cdt(t, 20.0, 0.02)
    fixed_pos = Point(0.3, 0.4)
    target = None
    for tid, i, a, b in r.iter_edges():
        da, db = r.verts[a].dof, r.verts[b].dof
        if {da, db} == {DOF_FIXED, DOF_FREE} and \
                (r.pos(a) == fixed_pos or r.pos(b) == fixed_pos):
            target = (tid, i, a if da == DOF_FIXED else b)
            break
    assert target is not None
    tid, i, fixed_vid = target
    res = r.contract_edge(tid, i)
    assert res.ok and res.survivor == fixed_vid
    assert r.pos(fixed_vid) == fixed_pos  # the fixed vertex does not move
    assert r.validate_topology() == []


def test_contract_both_fixed_rejected():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    tid, i, _, _ = next(iter(t.iter_edges()))
    res = t.contract_edge(tid, i)
    assert not res.ok and res.reason is ContractBlock.BOTH_FIXED


def test_contract_one_hop_blocked_topologically():
    # Two triangles sharing edge (a, b) with an extra vertex h joined to both
    # endpoints through outside triangles: merging would fold the fan.
    scene = Scene.from_geometry([], name="empty")
    t = Triangulation(scene)
    a = t.add_vertex(0.4, 0.5, DOF_FREE)
    b = t.add_vertex(0.6, 0.5, DOF_FREE)
    up = t.add_vertex(0.5, 0.62, DOF_FREE)
    dn = t.add_vertex(0.5, 0.38, DOF_FREE)
    h = t.add_vertex(0.5, 0.8, DOF_FREE)
    t._new_tri(a, b, up)
    t._new_tri(b, a, dn)
    t._new_tri(a, up, h)
    t._new_tri(up, b, h)
    t.rebuild_links()
    loc = t.find_edge(a, b)
    res = t.contract_edge(*loc)
    assert not res.ok and res.reason is ContractBlock.TOPOLOGY


def test_contract_fuzz_keeps_topology_valid():
    scene = random_segment_scene(8, seed=11)
    t = refine_cdt(build_cdt(scene), 22.0, 0.02).subdivide()
    rng = random.Random(2)
    done = 0
    for k in range(3000):
        tid = rng.randrange(len(t.tris))
        if t.tris[tid] is None:
            continue
        res = t.contract_edge(tid, rng.randrange(3))
        if res.ok:
            done += 1
            assert t.validate_topology() == [], k
        if t.num_tris < 16:
            break
    assert done > 50


def test_total_edge_length_counts_each_edge_once():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    assert t.total_edge_length() == pytest.approx(4 + math.sqrt(2), rel=1e-12)


def test_validate_reports_broken_link():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    tid = next(t.alive_tris())
    # Break one neighbor link by hand.
    for i in range(3):
        if t.tris[tid].nbr[i] is not None:
            t.tris[tid].nbr[i] = None
            break
    report = t.validate_topology()
    assert len(report) >= 1
    assert any("neighbor" in r or "no neighbor" in r for r in report)


def test_native_roundtrip(tmp_path):
    scene = random_segment_scene(10, seed=21)
    t = refine_cdt(build_cdt(scene), 20.0, math.inf)
    path = str(tmp_path / "tri.txt")
    save_triangulation(t, path)
    back = load_triangulation(path, scene)
    assert back.num_tris == t.num_tris
    assert back.num_verts == t.num_verts
    assert back.validate_topology() == []
    assert back.total_edge_length() == pytest.approx(t.total_edge_length(), rel=1e-15)


def test_triangle_format_roundtrip(tmp_path):
    scene = random_segment_scene(20, seed=22)
    t = build_cdt(scene)
    prefix = str(tmp_path / "mesh")
    write_triangle_files(t, prefix)
    back = read_triangle_files(prefix, scene)
    assert back.num_tris == t.num_tris
    assert back.num_verts == t.num_verts
    edges_a = sorted(tuple(sorted((t.pos(a), t.pos(b)))) for _, _, a, b in t.iter_edges())
    edges_b = sorted(tuple(sorted((back.pos(a), back.pos(b))))
                     for _, _, a, b in back.iter_edges())
    assert edges_a == edges_b
    flags_a = sorted(t.tris[e[0]].flag[e[1]] for e in t.iter_edges())
    flags_b = sorted(back.tris[e[0]].flag[e[1]] for e in back.iter_edges())
    assert flags_a == flags_b
    assert back.validate_topology() == []


def test_triangle_format_missing_section(tmp_path):
    scene = random_segment_scene(4, seed=23)
    t = build_cdt(scene)
    prefix = str(tmp_path / "mesh")
    write_triangle_files(t, prefix)
    import os
    os.remove(prefix + ".ele")
    with pytest.raises(TriangleFormatError, match="ele"):
        read_triangle_files(prefix, scene)


def test_triangle_format_external_markers(tmp_path):
    # Hand-built fixture: unit square split by one constrained diagonal.
    scene = Scene.from_geometry(
        [Segment(Point(0.0, 0.0), Point(1.0, 1.0))], normalize=False, validate=False)
    prefix = str(tmp_path / "ext")
    with open(prefix + ".node", "w") as fh:
        fh.write("4 2 0 1\n")
        fh.write("1 0 0 1\n2 1 0 1\n3 1 1 1\n4 0 1 1\n")
    with open(prefix + ".ele", "w") as fh:
        fh.write("2 3 0\n1 1 2 3\n2 1 3 4\n")
    with open(prefix + ".poly", "w") as fh:
        fh.write("0 2 0 1\n")
        fh.write("5 1\n")
        fh.write("1 1 3 1\n")   # diagonal, marker 1 -> segment 0
        fh.write("2 1 2 2\n3 2 3 3\n4 3 4 4\n5 4 1 5\n")
    back = read_triangle_files(prefix, scene)
    assert back.num_tris == 2
    assert back.validate_topology() == []
    flags = sorted(back.tris[e[0]].flag[e[1]] for e in back.iter_edges())
    assert flags == [0, 1, 2, 3, 4]
