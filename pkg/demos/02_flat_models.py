#!/usr/bin/env python3
"""Lightlike hypersurfaces of flat space, sampled numerically.

Two models in Minkowski space, lifted to the Darboux quadric:

  * the light cone of a point, where every point is umbilical and all foci
    sit at the vertex;
  * the null hypersurface ruled by the outward null normals of an ellipsoid
    in a spacelike slice, whose two foci per generator are the focal points
    of the ellipsoid's normal congruence.

For each one the script prints the finite-difference jet, compares the foci
with closed-form values, develops the adapted frame along a generator and
evaluates the geodesic equations on the ruling and on a curve that leaves it.
"""

import numpy as np

from lightlike import flat_model as fm
from lightlike.invariants import singular_points
from lightlike.pipeline import analyze

np.set_printoptions(precision=8, suppress=True)


def ellipsoid_foci(axes, u, t):
    a, b, c = axes
    X = np.array(axes) * fm.hyperspherical(np.asarray(u))
    w = float(np.sum(X ** 2 / np.array(axes) ** 4))
    H = -(X @ X - a * a - b * b - c * c) / (2 * (a * b * c) ** 2 * w ** 1.5)
    K = 1.0 / ((a * b * c) ** 2 * w ** 2)
    k = np.array([H - np.sqrt(H * H - K), H + np.sqrt(H * H - K)])
    return np.sort(k / (1 + t * k))


print("== light cone, vertex at the origin, n = 4 ==")
cone = fm.ModelSpec.cone(4)
p = (0.5, 1.0, 2.0)
jet = fm.generate_jet(cone, p, normalize=False)
print("g_ab\n", jet.g)
print("lambda_ab\n", jet.lam)
rep = analyze(jet)
print("classification:", rep.classification, " foci:", rep.foci.distinct, "x", rep.foci.multiplicities)
print("expected focus 1/(t + r) =", 1 / (p[0] + 1.0))

print("\n== null normals of the ellipsoid (1, 1.5, 2), n = 4 ==")
ell = fm.ModelSpec.ellipsoid((1.0, 1.5, 2.0))
for p in [(0.0, 0.9, 1.3), (0.5, 0.9, 1.3), (0.5, 2.0, 4.0)]:
    s = singular_points(fm.generate_jet(ell, p, normalize=False)).s
    print(f"t={p[0]:.1f} u={p[1:]}: foci {s}  closed form {ellipsoid_foci(ell.axes, p[1:], p[0])}")
check = fm.foci_cross_check(ell, (0.5, 0.9, 1.3))
print("foci where the ruled map drops rank:", check.from_jacobian,
      " max difference", f"{check.max_difference:.1e}")
print("Richardson ratio of lambda_ab (second-order stencil):", round(fm.richardson_ratio(ell, (0.5, 0.9, 1.3)), 4))

print("\n== development along a generator ==")
for name, spec in (("cone", cone), ("ellipsoid", ell)):
    dev = fm.develop_along_generator(spec, (1.1, 0.7), 0.0, 1.0, steps=200)
    geo = fm.geodesic_residual(spec, (1.1, 0.7))
    off = fm.geodesic_residual(spec, (1.1, 0.7), curve=fm.perturbed_curve((1.1, 0.7), (1.0, 0.5)))
    print(f"{name:10s} tangent-space angle {dev.max_angle:.1e}  Gram defect {dev.gram_defect:.1e}  "
          f"geodesic residual {geo:.1e}  (bent curve {off:.2f})")

print("\nFlat n = 4 jets have nu = 0, so H = 0 and the point is of special type:")
print("nu =", f"{fm.generate_jet(ell, (0.5, 0.9, 1.3)).nu:.1e}",
      "->", analyze(fm.generate_jet(ell, (0.5, 0.9, 1.3))).classification)
