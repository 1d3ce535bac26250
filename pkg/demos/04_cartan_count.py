#!/usr/bin/env python3
"""Counting the generality of lightlike hypersurfaces.

The defining system is one exterior quadratic equation in m = n - 2
independent forms.  Against a generic flag the reduced characters are all
1, so the Cartan number is Q = 1 + 2 + ... + m.  The integral elements of
the linearised system are the symmetric m x m matrices, N = m(m+1)/2.
Equality N = Q means the system is in involution: lightlike hypersurfaces
depend on one function of n - 1 variables.
"""

from lightlike.cartan_test import characters

print(f"{'n':>3} {'characters':<32} {'Q':>4} {'N':>4}  involutive")
for n in range(4, 13):
    r = characters(n, seed=n)
    print(f"{n:>3} {str(r.characters):<32} {r.Q:>4} {r.N:>4}  {r.involutive}")
