"""Faces of a cubical hyperbolization and the consistency of their fiber metrics.

The base is the product of a five-petal flower with a 4-cycle.  Each cube
gives a face whose normal fiber is a cone over the cube's link; metrics built
for a face and for a larger face must agree where their regions meet.
"""
from conesmith import complexes as C
from conesmith import hyperbolize as H
from conesmith.acceptance import CORRECTED

K = C.cube_product(C.flower(5), C.cycle_cubes(4))
lat = H.hyperbolize_lattice(K, s0=200.0, r=CORRECTED.r)
print(f"{len(K.cubes)} cubes, dimension {lat.dim}")
spheres = [c for c in K.cubes if lat.links[c] is not None and lat.is_sphere_link(c)]
print(f"{len(spheres)} faces have links that are spheres")

v = H.fiber_check(lat, CORRECTED, samples=200)
print(f"worst relative gap {v.max_relative:.3e}; outside the forcing shell {v.max_relative_outside_shell:.3e}")
worst = max(v.pairs + v.top, key=lambda p: p.max_relative)
print("worst pair:", worst)
print("containment:", H.intersection_containment(lat, CORRECTED, 500).passed)
print("Z regions of unrelated faces disjoint:", H.z_pair_disjoint(lat, CORRECTED, 500))
