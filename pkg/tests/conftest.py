import math
import random

import pytest

from mintri.geometry import Point, Segment, segments_cross
from mintri.scene import Scene


def random_segment_scene(n: int, seed: int, min_len: float = 0.02,
                         max_len: float = 0.25, separation: float = 0.01) -> Scene:
    """n random non-crossing segments inside the unit square, kept at least
    `separation` apart so refinement stays desk-scale."""
    from mintri.geometry import point_segment_distance

    rng = random.Random(seed)
    segs: list[Segment] = []
    tries = 0
    while len(segs) < n and tries < 400 * n:
        tries += 1
        x, y = rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)
        ang = rng.uniform(0.0, math.pi)
        length = rng.uniform(min_len, max_len)
        a = Point(x - 0.5 * length * math.cos(ang), y - 0.5 * length * math.sin(ang))
        b = Point(x + 0.5 * length * math.cos(ang), y + 0.5 * length * math.sin(ang))
        if not (0.0 <= a.x <= 1.0 and 0.0 <= a.y <= 1.0
                and 0.0 <= b.x <= 1.0 and 0.0 <= b.y <= 1.0):
            continue
        s = Segment(a, b)
        if any(segments_cross(s, t) for t in segs):
            continue
        too_close = False
        for t in segs:
            if min(point_segment_distance(p, t.a, t.b) for p in (s.a, s.b)) < separation \
                    or min(point_segment_distance(p, s.a, s.b) for p in (t.a, t.b)) < separation:
                too_close = True
                break
        if too_close:
            continue
        segs.append(s)
    assert len(segs) == n, f"could not place {n} segments"
    return Scene.from_geometry(segs, name=f"random-{n}-{seed}", normalize=False)


@pytest.fixture
def small_scene() -> Scene:
    return random_segment_scene(12, seed=100)
