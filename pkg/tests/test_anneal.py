import math
import random

import pytest

from conftest import random_segment_scene
from mintri.geometry import Point, Segment
from mintri.scene import Scene
from mintri.trimesh import DOF_FREE, DOF_ON_SEGMENT, build_cdt, refine_cdt
from mintri.objective import ObjectiveParams, objective
from mintri.anneal import (ALL_STRATEGIES, Annealer, PipelineConfig, Proposal,
                           Schedule, StrategyState, adapt_lambda, contract_all_short,
                           contract_and_polish, full_pipeline, greedy_flip_pass,
                           metropolis_accept, run_annealing)


def test_metropolis_always_accepts_downhill():
    rng = random.Random(0)
    assert all(metropolis_accept(-x, 0.01, rng) for x in (0.0, 1e-9, 1.0, 100.0))


def test_metropolis_statistics():
    rng = random.Random(1)
    n = 100000
    acc = sum(metropolis_accept(1.0, 1.0, rng) for _ in range(n)) / n
    assert acc == pytest.approx(math.exp(-1), abs=0.01)
    hard = sum(metropolis_accept(10.0, 1.0, rng) for _ in range(1000))
    assert hard == 0


def test_adapt_lambda_controller():
    s = StrategyState("x", 1.0, 1e-4, 1e3, accepts=23, attempts=100)
    assert adapt_lambda(s) == pytest.approx(1.0, rel=1e-12)
    s = StrategyState("x", 1.0, 1e-4, 1e3, accepts=46, attempts=100)
    assert adapt_lambda(s) == pytest.approx(math.sqrt(2.0), rel=1e-12)
    s = StrategyState("x", 1.0, 1e-4, 1e3, accepts=0, attempts=100)
    assert adapt_lambda(s) == 1e-4  # clamped at the floor
    assert s.attempts == 0 and s.accepts == 0


def test_schedule_geometric_endpoints():
    s = Schedule(t_init=0.02, t_final=1e-4, eps_init=0.05, eps_final=1e-3,
                 levels=10, steps_per_level=5)
    assert s.at(0) == (0.02, 0.05)
    t_last, e_last = s.at(9)
    assert t_last == pytest.approx(1e-4, rel=1e-12)
    assert e_last == pytest.approx(1e-3, rel=1e-12)
    ratios = [s.at(k + 1)[0] / s.at(k)[0] for k in range(9)]
    assert all(r == pytest.approx(ratios[0], rel=1e-9) for r in ratios)
    # Degenerate single level runs at fixed temperature.
    s1 = Schedule(t_init=0.01, t_final=0.01, eps_init=0.01, eps_final=0.01,
                  levels=1, steps_per_level=5)
    assert s1.at(0) == (0.01, 0.01)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule(t_init=1e-5, t_final=1e-4)
    with pytest.raises(ValueError):
        Schedule(eps_init=1e-5, eps_final=1e-4)


def _toy_with_free_vertex():
    pts = [Point(0.2, 0.2), Point(0.8, 0.25), Point(0.5, 0.8)]
    segs = [Segment(pts[0], pts[1]), Segment(pts[1], pts[2]), Segment(pts[2], pts[0])]
    sc = Scene.from_geometry(segs, normalize=False)
    t = build_cdt(sc)
    tid, _, _ = t.locate(Point(0.5, 0.4))
    vid = t.split_tri(tid, Point(0.5, 0.4), DOF_FREE, None)
    return t, vid, pts


def test_proposals_respect_constraints():
    scene = random_segment_scene(8, seed=41)
    t = refine_cdt(build_cdt(scene), 22.0, 0.03)
    params = ObjectiveParams(eps=0.05)
    eng = Annealer(t, params, Schedule(levels=1, steps_per_level=1),
                   random.Random(3))
    from mintri.geometry import point_segment_distance
    for name in ALL_STRATEGIES:
        for _ in range(40):
            prop = eng._propose(name)
            for vid, x, y in prop.moves:
                v = t.verts[vid]
                assert v.dof != 0, "fixed vertices never move"
                if v.dof == DOF_ON_SEGMENT:
                    seg = t.scene.segments[v.seg]
                    assert point_segment_distance(Point(x, y), seg.a, seg.b) <= 1e-12


def test_fixed_only_triangulation_yields_empty_proposals():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    params = ObjectiveParams(eps=0.05)
    eng = Annealer(t, params, Schedule(levels=1, steps_per_level=1), random.Random(0))
    for name in ALL_STRATEGIES:
        if name == "flip_edges":
            continue  # flips exist even in a fixed mesh
        assert eng._propose(name).empty


def test_contract_neighbor_try_once_semantics():
    # A vertex with no incident short edge whose resample stays uncontracted
    # must be dropped from the proposal entirely.
    t, vid, _ = _toy_with_free_vertex()
    params = ObjectiveParams(eps=1e-6)  # nothing is ever contracted
    eng = Annealer(t, params, Schedule(levels=1, steps_per_level=1), random.Random(5))
    for _ in range(50):
        prop = eng._propose("contract_neighbor")
        assert prop.empty


def test_annealing_empty_square_noop():
    t = build_cdt(Scene.from_geometry([], name="empty"))
    base = t.total_edge_length()
    params = ObjectiveParams(eps=1e-3)
    res = run_annealing(t, Schedule(levels=3, steps_per_level=50), params,
                        rng=random.Random(0))
    assert t.total_edge_length() == pytest.approx(base, rel=1e-15)
    assert res.best_f <= res.final_f + 1e-12


def test_annealing_converges_to_fermat_point():
    # Oracle: direct numerical minimization of the summed corner distances.
    t, vid, pts = _toy_with_free_vertex()
    params = ObjectiveParams(eps=1e-4)
    sched = Schedule(t_init=0.01, t_final=1e-7, eps_init=1e-3, eps_final=1e-4,
                     levels=80, steps_per_level=150)
    run_annealing(t, sched, params, rng=random.Random(1), strategies=["direct"])
    from scipy.optimize import minimize

    def cost(p):
        return sum(math.hypot(p[0] - q.x, p[1] - q.y) for q in pts)

    ref = minimize(cost, [0.5, 0.4], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12})
    got = t.verts[vid]
    assert math.hypot(got.x - ref.x[0], got.y - ref.x[1]) < 1e-3


def test_annealing_accepts_track_objective():
    # With fuzzy contraction off and penalties zero, the running f equals the
    # plain total edge length after every accepted step.
    scene = random_segment_scene(6, seed=55)
    t = refine_cdt(build_cdt(scene), 20.0, 0.05)
    params = ObjectiveParams(eps=0.01, fuzzy_enabled=False,
                             mu_angle=0.0, mu_minlen=0.0)
    checks = []

    def on_accept(tri, prop):
        checks.append(abs(objective(tri, params).f_total - tri.total_edge_length()))

    run_annealing(t, Schedule(t_init=0.01, t_final=1e-4, eps_init=0.01,
                              eps_final=0.01, levels=5, steps_per_level=80),
                  params, rng=random.Random(2), on_accept=on_accept)
    assert checks and max(checks) < 1e-9


def test_annealing_budget_cuts_run_short():
    scene = random_segment_scene(6, seed=56)
    t = refine_cdt(build_cdt(scene), 20.0, 0.05)
    params = ObjectiveParams(eps=0.02)
    res = run_annealing(t, Schedule(levels=50, steps_per_level=1000), params,
                        rng=random.Random(0), max_proposals=500)
    assert res.proposals <= 500


def test_annealing_reproducible_from_seed():
    def run():
        scene = random_segment_scene(6, seed=57)
        t = refine_cdt(build_cdt(scene), 20.0, 0.05)
        params = ObjectiveParams(eps=0.02)
        res = run_annealing(t, Schedule(levels=4, steps_per_level=100), params,
                            rng=random.Random(7))
        return res.final_f, t.total_edge_length()

    assert run() == run()


def test_proposal_symmetry_statistics():
    # Two-bin detailed balance: for a single free vertex in a fixed outer
    # triangle, forward and reverse proposal frequencies between two position
    # bins must agree within 3 sigma.
    t, vid, pts = _toy_with_free_vertex()
    params = ObjectiveParams(eps=1e-4)
    eng = Annealer(t, params, Schedule(levels=1, steps_per_level=1),
                   random.Random(11))
    eng.states["direct"].lam = 0.8
    v = t.verts[vid]
    bin_a = (0.45, 0.35)
    bin_b = (0.55, 0.45)
    r = 0.04
    n = 10 ** 6
    fwd = rev = 0
    half = n // 2
    for k in range(n):
        src = bin_a if k < half else bin_b
        v.x, v.y = src
        prop = eng._propose("direct")
        if not prop.moves:
            continue
        _, x, y = prop.moves[0]
        if k < half and math.hypot(x - bin_b[0], y - bin_b[1]) <= r:
            fwd += 1
        elif k >= half and math.hypot(x - bin_a[0], y - bin_a[1]) <= r:
            rev += 1
    # Poisson-ish counts; compare within 3 sigma of the pooled estimate.
    sigma = math.sqrt(fwd + rev)
    assert fwd > 100 and rev > 100
    assert abs(fwd - rev) <= 3.0 * sigma


def test_contract_all_short_and_greedy_flips():
    scene = random_segment_scene(8, seed=60)
    t = refine_cdt(build_cdt(scene), 22.0, 0.02).subdivide()
    params = ObjectiveParams(eps=0.04, eps0=1e-5)
    n0 = t.num_verts
    done = contract_all_short(t, params)
    assert done > 0
    assert t.num_verts == n0 - done
    assert t.validate_topology() == []
    before = t.total_edge_length()
    greedy_flip_pass(t)
    assert t.total_edge_length() <= before + 1e-12
    assert t.validate_topology() == []


def test_contract_and_polish_improves_and_stays_valid():
    scene = random_segment_scene(8, seed=61)
    t = refine_cdt(build_cdt(scene), 25.0, 0.02)
    base_len = t.total_edge_length()
    params = ObjectiveParams(eps=5e-3, eps0=1e-6)
    sched = Schedule(t_init=5e-3, t_final=1e-4, eps_init=5e-3, eps_final=5e-3,
                     levels=10, steps_per_level=60)
    out = contract_and_polish(t, params, sched, rng=random.Random(3),
                              polish_fraction=0.2)
    assert out.validate_topology() == []
    assert out.total_edge_length() <= base_len + 1e-9


def test_pipeline_config_file_roundtrip(tmp_path):
    cfg = PipelineConfig(schedule=Schedule(t_init=0.01, t_final=1e-4,
                                           eps_init=0.02, eps_final=1e-3,
                                           levels=30, steps_per_level=40),
                         iterations=1, seed=9, polish_fraction=0.2)
    path = str(tmp_path / "conf.txt")
    cfg.to_file(path)
    back = PipelineConfig.from_file(path)
    assert back.schedule == cfg.schedule
    assert back.iterations == 1 and back.seed == 9
    assert back.polish_fraction == pytest.approx(0.2)


def test_full_pipeline_never_worse_than_baseline():
    scene = random_segment_scene(5, seed=62, max_len=0.15)
    cfg = PipelineConfig(
        schedule=Schedule(t_init=0.02, t_final=1e-4, eps_init=0.04,
                          eps_final=2e-3, levels=12, steps_per_level=60),
        iterations=1, seed=0,
        angle_grid=[0.0, 20.0], area_grid=[math.inf, 0.05])
    res = full_pipeline(scene, cfg)
    assert res.triangulation.validate_topology() == []
    assert res.lengths["best"] <= res.lengths["optimal_refined_cdt"] + 1e-12
