"""Ray sampling and benchmark orchestration across the three query engines."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .accel import (C_T_GRID, SceneIndex, TriLocator, TraversalStats, brute_force_closest,
                    build_bvh, build_kdtree, kd_intersect, bvh_intersect,
                    sweep_structure_params, traverse_triangulation)
from .geometry import Point, Ray
from .scene import Scene
from .trimesh import Triangulation

COUNTER_FIELDS = ("tri_steps", "bvh_node_tests", "bvh_prim_tests",
                  "kd_nodes_visited", "kd_rope_steps", "kd_prim_tests")


class HitMismatchError(AssertionError):
    pass


def sample_rays(scene: Scene, count: int, seed: int = 0,
                triangulation: Optional[Triangulation] = None) -> list[Ray]:
    """Rays with origins uniform in the unit square and isotropic directions.

    Origins within 1e-9 of any segment are resampled. When a triangulation is
    given, each ray's start triangle is located and attached."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    segs = scene.segments
    ax = np.array([s.a.x for s in segs])
    ay = np.array([s.a.y for s in segs])
    ex = np.array([s.b.x - s.a.x for s in segs])
    ey = np.array([s.b.y - s.a.y for s in segs])
    ee = ex * ex + ey * ey
    origins: list[tuple[float, float]] = []
    while len(origins) < count:
        m = count - len(origins)
        xs = rng.random(m)
        ys = rng.random(m)
        px = xs[:, None] - ax[None, :]
        py = ys[:, None] - ay[None, :]
        u = np.clip((px * ex[None, :] + py * ey[None, :]) / ee[None, :], 0.0, 1.0)
        d2 = (px - u * ex[None, :]) ** 2 + (py - u * ey[None, :]) ** 2
        ok = np.sqrt(d2.min(axis=1)) > 1e-9
        origins.extend(zip(xs[ok], ys[ok]))
    thetas = rng.uniform(0.0, 2.0 * math.pi, size=count)
    rays = [Ray(Point(float(x), float(y)),
                Point(math.cos(float(t)), math.sin(float(t))))
            for (x, y), t in zip(origins[:count], thetas)]
    if triangulation is not None:
        locator = TriLocator(triangulation)
        for ray in rays:
            ray.start_tri = locator.locate(ray.origin)
    return rays


@dataclass
class MethodStats:
    method: str
    label: str
    totals: dict[str, int]
    ray_count: int
    extra: dict = field(default_factory=dict)

    @property
    def total_ops(self) -> int:
        return sum(self.totals.values())

    @property
    def mean_total(self) -> float:
        return self.total_ops / self.ray_count

    @property
    def means(self) -> dict[str, float]:
        return {k: v / self.ray_count for k, v in self.totals.items()}


@dataclass
class ExperimentReport:
    scene_name: str
    ray_count: int
    methods: list[MethodStats]
    edge_lengths: dict[str, float]
    timing: dict[str, float]
    config: dict

    def to_json(self) -> str:
        payload = {
            "scene": self.scene_name,
            "ray_count": self.ray_count,
            "edge_lengths": self.edge_lengths,
            "timing": self.timing,
            "config": self.config,
            "methods": [{
                "method": m.method,
                "label": m.label,
                "totals": m.totals,
                "total_ops": m.total_ops,
                "mean_total": m.mean_total,
                "means": m.means,
                **m.extra,
            } for m in self.methods],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["scene", "method", "label", "rays", *COUNTER_FIELDS,
                    "total_ops", "mean_total"])
        for m in self.methods:
            w.writerow([self.scene_name, m.method, m.label, m.ray_count,
                        *(m.totals.get(k, 0) for k in COUNTER_FIELDS),
                        m.total_ops, f"{m.mean_total:.6f}"])
        return buf.getvalue()


def _stats_totals(stats: TraversalStats) -> dict[str, int]:
    return {k: getattr(stats, k) for k in COUNTER_FIELDS if getattr(stats, k)}


def _check(scene_name: str, method: str, ray: Ray, hit, oracle) -> None:
    if (hit is None) != (oracle is None):
        raise HitMismatchError(
            f"{scene_name}/{method}: hit presence mismatch for ray {ray.origin} "
            f"{ray.direction}: {hit} vs oracle {oracle}")
    if hit is None:
        return
    if hit.seg != oracle.seg or abs(hit.t - oracle.t) > 1e-9 * max(1.0, abs(oracle.t)):
        raise HitMismatchError(
            f"{scene_name}/{method}: ray {ray.origin} {ray.direction} hit "
            f"seg {hit.seg} t={hit.t!r} but oracle seg {oracle.seg} t={oracle.t!r}")


def run_experiment(scene: Scene, triangulations: Sequence[Triangulation],
                   rays: Sequence[Ray],
                   labels: Optional[Sequence[str]] = None,
                   ct_grid: Iterable[float] = C_T_GRID) -> ExperimentReport:
    """Trace every ray through each triangulation plus cost-swept BVH and
    roped kd-tree structures, verifying each hit against the brute-force
    oracle. Any disagreement aborts the run."""
    labels = list(labels) if labels is not None else \
        [f"tri{k}" for k in range(len(triangulations))]
    index = SceneIndex(scene)
    timing: dict[str, float] = {}
    t0 = time.perf_counter()
    oracle_hits = [brute_force_closest(scene, ray, index) for ray in rays]
    timing["oracle"] = time.perf_counter() - t0

    methods: list[MethodStats] = []
    edge_lengths: dict[str, float] = {}
    for label, tri in zip(labels, triangulations):
        edge_lengths[label] = tri.total_edge_length()
        locator = TriLocator(tri)
        agg = TraversalStats()
        t0 = time.perf_counter()
        for ray, oracle in zip(rays, oracle_hits):
            # Start triangles are located per triangulation (uncounted).
            start = locator.locate(ray.origin)
            hit, stats = traverse_triangulation(tri, ray, start, index)
            _check(scene.name, f"triangulation[{label}]", ray, hit, oracle)
            agg.add(stats)
        timing[f"triangulation[{label}]"] = time.perf_counter() - t0
        methods.append(MethodStats("triangulation", label,
                                   _stats_totals(agg), len(rays)))

    t0 = time.perf_counter()
    bvh_sweep = sweep_structure_params(build_bvh, scene, rays, ct_grid)
    timing["bvh_sweep"] = time.perf_counter() - t0
    agg = TraversalStats()
    for ray, oracle in zip(rays, oracle_hits):
        hit, stats = bvh_intersect(bvh_sweep.structure, ray)
        _check(scene.name, "bvh", ray, hit, oracle)
        agg.add(stats)
    methods.append(MethodStats("bvh", f"c_t={bvh_sweep.best_c_t:g}",
                               _stats_totals(agg), len(rays),
                               extra={"sweep_totals": {str(k): v for k, v
                                                       in bvh_sweep.totals.items()}}))

    t0 = time.perf_counter()
    kd_sweep = sweep_structure_params(build_kdtree, scene, rays, ct_grid)
    timing["kd_sweep"] = time.perf_counter() - t0
    agg = TraversalStats()
    for ray, oracle in zip(rays, oracle_hits):
        hit, stats = kd_intersect(kd_sweep.structure, ray)
        _check(scene.name, "kd", ray, hit, oracle)
        agg.add(stats)
    methods.append(MethodStats("kd", f"c_t={kd_sweep.best_c_t:g}",
                               _stats_totals(agg), len(rays),
                               extra={"sweep_totals": {str(k): v for k, v
                                                       in kd_sweep.totals.items()}}))
    return ExperimentReport(scene.name, len(rays), methods, edge_lengths,
                            timing, {"ct_grid": list(ct_grid)})
