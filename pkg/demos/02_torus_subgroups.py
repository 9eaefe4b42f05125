"""
Closed subgroups of the rational torus
======================================

Character values live in (Q/Z)^d. A closed subgroup is stored by its
annihilator: the lattice of integer rows lam with lam . x = 0 in Q/Z
for every x in the subgroup. Duality turns joins of subgroups into
intersections of annihilators, which keeps everything exact.
"""

from fractions import Fraction

from ppstar import TorusCoset, TorusPoint, closure_of
from ppstar.torus import coset_intersect


def pt(*coords):
    return TorusPoint.make([Fraction(str(c)) for c in coords])


# The closure of the subgroup generated by finitely many points.
g = closure_of([pt("1/4", "0"), pt("0", "1/6")], 2)
print("annihilator rows:", g.annihilator.rows())
print("order:", g.order())
print("contains (3/4, 1/2):", g.contains(pt("3/4", "1/2")))
print("contains (1/3, 0):  ", g.contains(pt("1/3", "0")))

# Orders multiply when the generated subgroups only share 0.
h = closure_of([pt("1/2", "1/3"), pt("0", "1/5")], 2)
print("mixed generators, order:", h.order())

# Cosets x + G support membership and exact intersection.
c1 = TorusCoset.make(pt("1/8", "0"), closure_of([pt("1/4", "0")], 2))
c2 = TorusCoset.make(pt("3/8", "0"), closure_of([pt("1/2", "0")], 2))
both = coset_intersect(c1, c2)
print("coset intersection empty:", both.is_empty)
if not both.is_empty:
    print("rep:", both.rep.coords, "group order:", both.group.order())

# Enumerate a small finite subgroup.
small = closure_of([pt("1/3", "1/3")], 2)
print("elements:", sorted(str(e.coords) for e in small.elements()))
