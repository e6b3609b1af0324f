"""The fuzzy-contraction objective at work on a miniature example.

A short edge between two fans gets fuzzily contracted: watch the weighted
edge length drop below the plain total as the contraction length grows past
the short edge's length.
"""
from mintri import ObjectiveParams, Scene, build_cdt, objective
from mintri.geometry import Point, Segment
from mintri.trimesh import DOF_FREE, refine_cdt

scene = Scene.from_geometry(
    [Segment(Point(0.3, 0.35), Point(0.7, 0.6))], normalize=False)
# Subdivide once so the mesh has sub-scale edges for the contraction to see.
tri = refine_cdt(build_cdt(scene), 22.0, 0.02).subdivide()
print(f"mesh: {tri.num_tris} triangles, plain length {tri.total_edge_length():.4f}")

for eps in (1e-6, 0.01, 0.03, 0.06, 0.1):
    br = objective(tri, ObjectiveParams(eps=eps))
    print(f"eps={eps:<6g} weighted length {br.w_contractible:.4f} "
          f"angle penalty {br.angle_penalty:.4f} f={br.f_total:.4f}")

print("\nfuzzy contraction disabled recovers the plain length:")
br = objective(tri, ObjectiveParams(eps=0.05, fuzzy_enabled=False,
                                    mu_angle=0.0, mu_minlen=0.0))
print(f"f = {br.f_total:.6f} vs total {tri.total_edge_length():.6f}")
