"""Smooth the cone over the suspension of a pentagon and sample its curvature.

The suspension has two cone points over the poles whose links are pentagons,
so the cone over it is singular along two rays.  The smoothed metric is
exactly hyperbolic in a core ball and equal to the cone metric far out, with
negative curvature in between.
"""
import numpy as np

from conesmith import complexes as C
from conesmith import cones as K
from conesmith.acceptance import CORRECTED, dim2_pinch
from conesmith.smoothing import property_report, smooth_cone

P = C.suspension(C.circle_complex(5))
print("vertices:", sorted(P.vertices))
r0, s20, r20 = K.radii(CORRECTED, P.dim, 0)
print(f"vertex cone radius r_0={r0:.2f}; Y region of a vertex between {r20:.2f} and {s20:.2f}")

G = smooth_cone(P, CORRECTED)
print(f"hyperbolic core radius {G.core:.2f}, forcing radius {G.top_radius:.2f}")
rep = property_report(G, count=400)
print("relative deviations:", vars(rep))

G, s, rep, top = dim2_pinch(CORRECTED, count=400)
print(f"K in [{rep.k_min:.4f}, {rep.k_max:.4f}] over {rep.samples} points x {rep.planes} planes")
print(f"{int(top.sum())} of the sampled points lie in X(top), where the metric is the cone metric")
