import math

import pytest

from mintri.geometry import Point, Segment, SegmentKind
from mintri.scene import (Scene, SceneError, normalize_scene, parse_scene,
                          serialize_scene)


def test_from_geometry_builds_square():
    sc = Scene.from_geometry([], name="empty")
    assert len(sc.segments) == 4
    assert all(s.kind is SegmentKind.BOUNDARY for s in sc.segments)


def test_normalize_identity():
    segs = [Segment(Point(0.0, 0.0), Point(1.0, 0.4))]
    sc = Scene.from_geometry(segs, normalize=True)
    g = sc.geometry[0]
    assert (g.a, g.b) == (segs[0].a, segs[0].b)


def test_normalize_scale_invariance():
    segs = [Segment(Point(0.1, 0.1), Point(0.9, 0.55)),
            Segment(Point(0.2, 0.7), Point(0.8, 0.8))]
    sc1 = normalize_scene(Scene.from_geometry(segs, normalize=False, validate=False))
    doubled = [Segment(Point(2 * s.a.x, 2 * s.a.y), Point(2 * s.b.x, 2 * s.b.y))
               for s in segs]
    sc2 = normalize_scene(Scene.from_geometry(doubled, normalize=False, validate=False))
    for a, b in zip(sc1.geometry, sc2.geometry):
        assert a.a == pytest.approx(b.a, abs=1e-15)
        assert a.b == pytest.approx(b.b, abs=1e-15)


def test_normalize_preserves_length_ratios():
    segs = [Segment(Point(3.0, 4.0), Point(5.0, 9.0)),
            Segment(Point(6.0, 2.0), Point(7.5, 2.5))]
    sc = normalize_scene(Scene(segs, "raw"))
    before = segs[0].length / segs[1].length
    after = sc.geometry[0].length / sc.geometry[1].length
    assert after == pytest.approx(before, rel=1e-12)


def test_degenerate_segment_rejected_at_construction():
    # Zero-extent scenes cannot even be expressed: segments refuse a == b.
    with pytest.raises(ValueError):
        Segment(Point(0.5, 0.5), Point(0.5, 0.5 + 1e-18))


def test_crossing_rejected():
    segs = [Segment(Point(0.2, 0.2), Point(0.8, 0.8)),
            Segment(Point(0.2, 0.8), Point(0.8, 0.2))]
    with pytest.raises(SceneError, match="crossing"):
        Scene.from_geometry(segs, normalize=False)


def test_shared_endpoints_allowed():
    segs = [Segment(Point(0.2, 0.2), Point(0.5, 0.5)),
            Segment(Point(0.5, 0.5), Point(0.8, 0.3))]
    Scene.from_geometry(segs, normalize=False)  # must not raise


def test_duplicate_segment_rejected():
    segs = [Segment(Point(0.2, 0.2), Point(0.8, 0.8)),
            Segment(Point(0.8, 0.8), Point(0.2, 0.2))]
    with pytest.raises(SceneError):
        Scene.from_geometry(segs, normalize=False)


def test_scene_roundtrip(tmp_path):
    segs = [Segment(Point(0.123456789012345, 0.2), Point(0.9, 1 / 3))]
    sc = Scene.from_geometry(segs, name="rt", provenance="unit test", normalize=False)
    path = tmp_path / "scene.txt"
    sc.save(str(path))
    back = Scene.load(str(path))
    assert back.name == "rt"
    assert back.provenance == "unit test"
    assert [(s.a, s.b, s.kind) for s in back.segments] == \
        [(s.a, s.b, s.kind) for s in sc.segments]
    # Serialization is byte-stable.
    assert serialize_scene(back) == serialize_scene(sc)


def test_parse_errors():
    with pytest.raises(SceneError):
        parse_scene("not a scene\n")
    with pytest.raises(SceneError):
        parse_scene("mintri-scene v1\nname x\nsegments 2\n0 0 1 0 G\n")
