"""Generate the synthetic scene families and look at their constrained
Delaunay triangulations.

Run from the repository root:  python3 demos/01_scenes_and_cdt.py
Outputs SVG files into demos/out/.
"""
import os

from mintri import build_cdt, gen_grass, gen_hair, gen_lines, render_svg

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

scenes = [
    gen_lines(64, "uniform", 1.0, seed=1),
    gen_lines(64, "diagonal", 3.0, seed=1),
    gen_grass(16, segments_per_leaf=10, seed=2),
    gen_hair(8, segments_per_strand=5, seed=3),
]

for scene in scenes:
    tri = build_cdt(scene)
    report = tri.validate_topology()
    assert not report, report
    path = os.path.join(OUT, f"cdt_{scene.name}.svg")
    with open(path, "w") as fh:
        fh.write(render_svg(scene, triangulation=tri))
    print(f"{scene.name}: {len(scene.geometry)} segments -> "
          f"{tri.num_tris} triangles, total edge length "
          f"{tri.total_edge_length():.3f}  ({path})")
