"""
Exact integer lattice algebra
=============================

Everything downstream rests on computing with subgroups of Z^n as row
lattices: Hermite normal form gives a canonical basis, Smith normal form
gives invariant factors, and intersection / index are exact.
"""

from ppstar import IntMatrix, Lattice, hnf_rows, index_of, intersect, snf

# A lattice is the row span of an integer matrix. Hermite normal form
# canonicalizes the generators, so two generating sets span the same
# lattice iff their HNF rows agree.
rows_a = [(4, 2), (2, 4)]
rows_b = [(2, 4), (6, 6), (0, 6)]
print("hnf of a:", hnf_rows(rows_a, 2))
print("hnf of b:", hnf_rows(rows_b, 2))

# Smith normal form D = U m V with unimodular U, V. The diagonal entries
# are the invariant factors of Z^n / rowspan(m).
m = IntMatrix.from_rows([(4, 2), (2, 4)])
u, d, v = snf(m)
print("snf diagonal:", [d.entries[i][i] for i in range(2)])
assert u.mul(m).mul(v).entries == d.entries

# Lattice wraps an HNF basis. Intersection and index are exact; index_of
# returns INFINITE when the quotient is infinite.
a = Lattice.from_rows(2, [(2, 0), (0, 3)])
b = Lattice.from_rows(2, [(3, 0), (0, 2)])
meet = intersect(a, b)
print("intersection basis:", meet.rows())
print("index of meet in a:", index_of(meet, a))
print("index of a in Z^2:", index_of(a, Lattice.full(2)))

# Membership and canonical reduction mod the lattice.
print("(4, 6) in a:", a.member((4, 6)))
print("(5, 7) reduced mod a:", a.reduce((5, 7)))
