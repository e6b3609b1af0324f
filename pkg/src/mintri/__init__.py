"""Minimum-weight constrained triangulations of 2D segment scenes.

Build a constrained Delaunay triangulation of a scene, anneal it toward
minimum total edge length with fuzzy edge contraction, and benchmark the
stackless ray traversal of the result against an SAH BVH and an idealized
roped kd-tree.
"""
from .geometry import Point, Ray, Segment, SegmentKind, UniformGrid, orient2d
from .scene import Scene, normalize_scene
from .trimesh import (Triangulation, build_cdt, optimal_refined_cdt, refine_cdt,
                      load_triangulation, save_triangulation)
from .objective import ObjectiveParams, objective, delta_objective, is_contractible
from .anneal import (PipelineConfig, Schedule, contract_and_polish, full_pipeline,
                     run_annealing)
from .accel import (Bvh, RopedKdTree, brute_force_closest, build_bvh, build_kdtree,
                    locate_triangle, sweep_structure_params, traverse_triangulation)
from .experiment import run_experiment, sample_rays
from .generators import gen_grass, gen_hair, gen_line_over_curve, gen_lines
from .svg_io import import_svg, render_svg

__all__ = [
    "Point", "Ray", "Segment", "SegmentKind", "UniformGrid", "orient2d",
    "Scene", "normalize_scene",
    "Triangulation", "build_cdt", "refine_cdt", "optimal_refined_cdt",
    "load_triangulation", "save_triangulation",
    "ObjectiveParams", "objective", "delta_objective", "is_contractible",
    "PipelineConfig", "Schedule", "run_annealing", "contract_and_polish",
    "full_pipeline",
    "Bvh", "RopedKdTree", "build_bvh", "build_kdtree", "brute_force_closest",
    "locate_triangle", "sweep_structure_params", "traverse_triangulation",
    "run_experiment", "sample_rays",
    "gen_lines", "gen_grass", "gen_hair", "gen_line_over_curve",
    "import_svg", "render_svg",
]

__version__ = "0.1.0"
