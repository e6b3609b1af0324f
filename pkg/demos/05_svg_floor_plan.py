"""Ingest an SVG drawing (curves flattened to segments, endpoints merged),
triangulate it, and benchmark ray traversal on the result.

Uses a small built-in floor-plan-like drawing so the demo is self-contained;
point `SVG_PATH` at any real vector floor plan to try your own.
"""
import os

from mintri import build_cdt, import_svg, render_svg, run_experiment, sample_rays

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

SVG_PATH = os.path.join(OUT, "plan.svg")
with open(SVG_PATH, "w") as fh:
    fh.write("""<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 80">
  <polyline points="5,5 95,5 95,75 5,75 5,5"/>
  <line x1="6" y1="40" x2="42" y2="40"/>
  <line x1="58" y1="40" x2="94" y2="40"/>
  <line x1="50" y1="6" x2="50" y2="28"/>
  <path d="M 50 52 C 58 52 64 58 64 66"/>
  <path d="M 20 20 Q 28 12 36 20"/>
</svg>""")

scene = import_svg(SVG_PATH, flatten_tolerance=0.5, merge_tolerance=1e-6)
print(f"imported {len(scene.geometry)} segments from {SVG_PATH}")
tri = build_cdt(scene)
rays = sample_rays(scene, 2000, seed=0)
report = run_experiment(scene, [tri], rays, labels=["cdt"], ct_grid=[0.5, 1.0, 2.0])
for m in report.methods:
    print(f"{m.method:14s} mean ops/ray {m.mean_total:7.2f}  {m.totals}")

out = os.path.join(OUT, "plan_triangulated.svg")
with open(out, "w") as fh:
    fh.write(render_svg(scene, triangulation=tri, rays=rays[:25]))
print(f"wrote {out}")
