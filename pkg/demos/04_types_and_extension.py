"""
pp* types, back-and-forth extension, automorphism orbits
========================================================

Two tuples have the same pp* type when every basis formula puts them in
the same fiber over the torus. On finite structures that is supposed to
agree with lying in the same automorphism orbit, and any partial
correspondence of equal types should extend one element at a time.
"""

from ppstar import (
    Caps,
    basis_generate,
    eq_ppstar_type,
    extend,
    fingerprint,
    orbit_oracle,
    structure_from_dict,
)

Z8 = structure_from_dict({
    "name": "Z8",
    "ambient_rank": 1,
    "relations": [[8]],
    "subgroups": {},
    "character": {"torus_dim": 1, "matrix": [["1/8"]]},
    "parameters": {},
})

caps = Caps(k_max=1, max_atoms=2, max_coeff=4)
basis = basis_generate(Z8, 1, caps)
print("basis size (arity 1):", len(basis.formulas))

# f separates 1 from 3 (different character values), and the orbit
# oracle agrees since any automorphism must preserve f.
fp1 = fingerprint(Z8, (1,), basis)
fp3 = fingerprint(Z8, (3,), basis)
print("f(1) =", str(fp1.f_values.coords[0]), " f(3) =", str(fp3.f_values.coords[0]))
print("types equal:", eq_ppstar_type(Z8, (1,), (3,), basis))
print("same orbit: ", orbit_oracle(Z8, (1,), (3,)))

# Without the character the same comparison comes out equal: 1 and 3
# both generate Z8.
Z8_plain = structure_from_dict({
    "name": "Z8p",
    "ambient_rank": 1,
    "relations": [[8]],
    "subgroups": {},
    "character": {"torus_dim": 0, "matrix": []},
    "parameters": {},
})
basis_plain = basis_generate(Z8_plain, 1, caps)
print("plain Z8, 1 vs 3:", eq_ppstar_type(Z8_plain, (1,), (3,), basis_plain),
      "| orbit:", orbit_oracle(Z8_plain, (1,), (3,)))

# extend((1,) -> (3,)) by c = 2: the image must keep the pp* type of
# (1, 2) and (3, d) equal, here d = 6 = 3*2.
d = extend(Z8_plain, (1,), (3,), (2,), basis_plain)
print("extension of 2 along 1 -> 3:", d)
basis2 = basis_generate(Z8_plain, 2, caps)
assert eq_ppstar_type(Z8_plain, (1, 2), (3,) + d, basis2)
