"""
pp formulas, evaluation, coset coverage
=======================================

A pp formula is an existentially quantified conjunction of atoms
Eq(linear term) and f(linear term) = q. Its solution set in A^m is a
coset of a definable subgroup, which is what makes coverage decidable:
a coset covered by finitely many cosets must already lie in one of
them once the cover is reduced to the maximal-index pieces.
"""

from ppstar import cover_decide, eval_pp, parse, satisfies_ppstar, structure_from_dict

# Z with a distinguished parameter a = 1 (so formulas can mention odd shifts).
Z = structure_from_dict({
    "name": "Z",
    "ambient_rank": 1,
    "relations": [],
    "subgroups": {},
    "character": {"torus_dim": 0, "matrix": []},
    "parameters": {"a": [1]},
})

sig = Z.signature()

evens = eval_pp(Z, parse("E y. Eq(x - 2*y)", sig))
odds = eval_pp(Z, parse("E y. Eq(x - 2*y - a)", sig))
print("evens:", "rep", evens.rep, "group", evens.group.rows())
print("odds: ", "rep", odds.rep, "group", odds.group.rows())

everything = eval_pp(Z, parse("Eq(x - x)", sig))
print("evens + odds cover Z:", cover_decide(everything, [evens, odds]))
print("evens alone cover Z: ", cover_decide(everything, [evens]))

# The classic counterexample shape: proper cosets of infinite index never
# cover, no matter how many are thrown in.
thirds = [eval_pp(Z, parse(f, sig)) for f in
          ("E y. Eq(x - 3*y)", "E y. Eq(x - 3*y - a)")]
print("two thirds cover Z:  ", cover_decide(everything, thirds))

# With a character into the torus, pp* formulas also fix f-values.
Z4 = structure_from_dict({
    "name": "Z4",
    "ambient_rank": 1,
    "relations": [[4]],
    "subgroups": {},
    "character": {"torus_dim": 1, "matrix": [["1/4"]]},
    "parameters": {},
})
psi = parse("E y. Eq(x - 2*y) & f(y) = 1/4", Z4.signature())
for v in range(4):
    print(f"x = {v} satisfies:", satisfies_ppstar(Z4, psi, (v,)))
