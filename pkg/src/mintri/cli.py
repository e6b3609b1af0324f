"""Command line interface.

Subcommands: gen, import-svg, cdt, refine, optimize, bench, render.
All configuration flows through flags or an optional key/value config file;
no environment variables are consulted.
"""
from __future__ import annotations

import argparse
import math
import sys

from . import generators, svg_io
from .anneal import PipelineConfig, Schedule, full_pipeline
from .experiment import run_experiment, sample_rays
from .scene import Scene
from .trimesh import (build_cdt, load_triangulation, optimal_refined_cdt,
                      refine_cdt, save_triangulation)


def _cmd_gen(args) -> int:
    if args.family == "lines":
        scene = generators.gen_lines(args.n, args.orientation, args.length_factor,
                                     args.seed)
    elif args.family == "grass":
        scene = generators.gen_grass(args.n, args.segments_per_leaf, args.seed)
    elif args.family == "hair":
        scene = generators.gen_hair(args.n, args.segments_per_strand, args.seed)
    else:
        scene = generators.gen_line_over_curve(args.curve_segments, args.two_lines,
                                               seed=args.seed)
    scene.save(args.out)
    print(f"wrote {args.out}: {len(scene.geometry)} segments")
    return 0


def _cmd_import_svg(args) -> int:
    scene = svg_io.import_svg(args.input, args.flatten_tol, args.merge_tol)
    scene.save(args.out)
    print(f"wrote {args.out}: {len(scene.geometry)} segments")
    return 0


def _cmd_cdt(args) -> int:
    scene = Scene.load(args.scene)
    tri = build_cdt(scene)
    save_triangulation(tri, args.out)
    print(f"wrote {args.out}: {tri.num_tris} triangles, "
          f"total edge length {tri.total_edge_length():.6f}")
    return 0


def _cmd_refine(args) -> int:
    scene = Scene.load(args.scene)
    if args.sweep:
        tri = optimal_refined_cdt(scene)
    else:
        tri = refine_cdt(build_cdt(scene), args.min_angle, args.max_area)
    save_triangulation(tri, args.out)
    print(f"wrote {args.out}: {tri.num_tris} triangles, "
          f"total edge length {tri.total_edge_length():.6f}")
    return 0


def _cmd_optimize(args) -> int:
    scene = Scene.load(args.scene)
    if args.config:
        config = PipelineConfig.from_file(args.config)
    else:
        config = PipelineConfig()
    if args.iterations is not None:
        config.iterations = args.iterations
    if args.seed is not None:
        config.seed = args.seed
    if args.levels is not None:
        config.schedule.levels = args.levels
    if args.steps_per_level is not None:
        config.schedule.steps_per_level = args.steps_per_level
    if args.max_seconds is not None:
        config.max_seconds = args.max_seconds
    result = full_pipeline(scene, config)
    save_triangulation(result.triangulation, args.out)
    for key, val in result.lengths.items():
        print(f"{key}: {val:.6f}")
    print(f"wrote {args.out}")
    return 0


def _cmd_bench(args) -> int:
    scene = Scene.load(args.scene)
    tris = [load_triangulation(p, scene) for p in args.tri]
    labels = args.label or [f"tri{k}" for k in range(len(tris))]
    rays = sample_rays(scene, args.rays, args.seed)
    report = run_experiment(scene, tris, rays, labels=labels)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json())
        print(f"wrote {args.json}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(report.to_csv())
        print(f"wrote {args.csv}")
    for m in report.methods:
        print(f"{m.method}[{m.label}]: mean ops/ray {m.mean_total:.3f} "
              f"({m.totals})")
    return 0


def _cmd_render(args) -> int:
    scene = Scene.load(args.scene)
    tri = bvh = kd = None
    if args.tri:
        tri = load_triangulation(args.tri, scene)
    if args.bvh:
        from .accel import build_bvh
        bvh = build_bvh(scene, args.c_t)
    if args.kd:
        from .accel import build_kdtree
        kd = build_kdtree(scene, args.c_t)
    rays = sample_rays(scene, args.rays, args.seed) if args.rays else None
    doc = svg_io.render_svg(scene, triangulation=tri, bvh=bvh, kd=kd, rays=rays)
    with open(args.out, "w") as fh:
        fh.write(doc)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mintri",
                                 description="minimum-weight triangulation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic scene")
    g.add_argument("--family", choices=("lines", "grass", "hair", "line-over-curve"),
                   required=True)
    g.add_argument("--n", type=int, default=16)
    g.add_argument("--orientation", choices=generators.ORIENTATIONS, default="uniform")
    g.add_argument("--length-factor", type=float, default=1.0)
    g.add_argument("--segments-per-leaf", type=int, default=3)
    g.add_argument("--segments-per-strand", type=int, default=5)
    g.add_argument("--curve-segments", type=int, default=24)
    g.add_argument("--two-lines", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_gen)

    imp = sub.add_parser("import-svg", help="convert an SVG file to a scene")
    imp.add_argument("--input", required=True)
    imp.add_argument("--flatten-tol", type=float, default=1e-3)
    imp.add_argument("--merge-tol", type=float, default=1e-6)
    imp.add_argument("--out", required=True)
    imp.set_defaults(fn=_cmd_import_svg)

    c = sub.add_parser("cdt", help="build the unrefined constrained Delaunay triangulation")
    c.add_argument("--scene", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_cdt)

    r = sub.add_parser("refine", help="refined CDT (single cell or parameter sweep)")
    r.add_argument("--scene", required=True)
    r.add_argument("--min-angle", type=float, default=20.0)
    r.add_argument("--max-area", type=float, default=math.inf)
    r.add_argument("--sweep", action="store_true",
                   help="sweep the default parameter grid for the shortest result")
    r.add_argument("--out", required=True)
    r.set_defaults(fn=_cmd_refine)

    o = sub.add_parser("optimize", help="run the full optimization pipeline")
    o.add_argument("--scene", required=True)
    o.add_argument("--config", help="key = value config file")
    o.add_argument("--iterations", type=int)
    o.add_argument("--levels", type=int)
    o.add_argument("--steps-per-level", type=int)
    o.add_argument("--seed", type=int)
    o.add_argument("--max-seconds", type=float)
    o.add_argument("--out", required=True)
    o.set_defaults(fn=_cmd_optimize)

    b = sub.add_parser("bench", help="benchmark traversal ops for stored triangulations")
    b.add_argument("--scene", required=True)
    b.add_argument("--tri", action="append", required=True,
                   help="triangulation file (repeatable)")
    b.add_argument("--label", action="append")
    b.add_argument("--rays", type=int, default=100000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--json")
    b.add_argument("--csv")
    b.set_defaults(fn=_cmd_bench)

    rd = sub.add_parser("render", help="render a scene and optional structure to SVG")
    rd.add_argument("--scene", required=True)
    rd.add_argument("--tri")
    rd.add_argument("--bvh", action="store_true")
    rd.add_argument("--kd", action="store_true")
    rd.add_argument("--c-t", type=float, default=1.0)
    rd.add_argument("--rays", type=int, default=0)
    rd.add_argument("--seed", type=int, default=0)
    rd.add_argument("--out", required=True)
    rd.set_defaults(fn=_cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
