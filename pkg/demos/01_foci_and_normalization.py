#!/usr/bin/env python3
"""From a raw second-order jet to the normalizing affinor.

Walks one hand-built jet (n = 5, identity screen metric, lambda = diag(1, 2, 4))
through the second- and third-order invariants:

  1. the foci on the generator are the roots of det(lambda - s g);
  2. the harmonic pole is their mean, and moving A_1 there leaves the
     trace-free tensor h;
  3. mu and the affinor H are built from h; H is trace-free and shares
     eigenvectors with h;
  4. with nonzero mu_a, nu_a the objects M, N, P, Q fix an invariant screen.

Every number printed here is small enough to check by hand.
"""

import numpy as np

from lightlike import invariants as inv
from lightlike.jet_model import CurvatureSlice, HypersurfaceJet, normalize_to_harmonic_pole

np.set_printoptions(precision=6, suppress=True)

m = 3
jet = HypersurfaceJet(
    n=m + 2, g=np.eye(m), lam=np.diag([1.0, 2.0, 4.0]), lam3=np.zeros((m, m, m)),
    curvature=CurvatureSlice.zeros(m), nu_a=[0.0, 1.0, 0.0],
)

foci = inv.singular_points(jet)
print("foci s_a            ", foci.s)
print("harmonic pole       ", foci.pole_coordinate, "(mean of the foci)")

nj = normalize_to_harmonic_pole(jet)
h, hm = inv.fundamental_tensor(nj)
print("h_ab                ", np.diag(h), " trace", np.trace(hm))
pole = inv.pole_regularity(nj)
print("det h               ", pole.det, "-> pole is", "regular" if pole.regular else "singular")

mu, _ = inv.mu_invariants(nj)
print("mu                  ", mu, "(14/9 =", 14 / 9, ")")
aff = inv.normalizing_affinor(nj, mu)
print("H                   ", np.diag(aff.H), " trace", np.trace(aff.H))

# take mu_a = (1, 0, 0) by hand; the jet itself carries nu_a = (0, 1, 0)
objs = inv.normalizing_objects(nj, mu, [1.0, 0.0, 0.0], aff.H_inv)
print("M                   ", objs.M)
print("N                   ", objs.N)
print("P = Ht M            ", objs.P)
print("Q = Ht N / mu       ", objs.Q)
frame = inv.screen_frame(nj, objs.P, objs.Q)
print("screen C_a over (A_0, A_1, A_2..A_4, A_5, A_6):")
print(frame.coefficients)
print("projective dimension of the screen:", frame.screen_rank() - 1)

# a diagonal lambda with its middle entry at the mean gives det h = 0
flat = jet.replace(lam=np.diag([1.0, 2.0, 3.0]))
print("\nlambda = diag(1,2,3): pole regular?", inv.pole_regularity(flat).regular)
