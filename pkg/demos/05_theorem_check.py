"""
Cross-validating type equality against automorphism orbits
==========================================================

On a finite structure, equal pp* type over a basis at stabilized caps
should coincide exactly with lying in the same orbit of the
automorphism group (the subgroup preserving the distinguished
subgroups and the character). check_theorem compares the two
partitions; fixpoint_caps grows the caps until the type partition
stops refining.
"""

import random

from ppstar import check_theorem, fixpoint_caps
from ppstar.randgen import random_finite_structure

rng = random.Random(11)
s = random_finite_structure(rng, max_rank=2, max_order=12)
print("structure:", s.name)
print("invariant factors:", s.invariant_factors())
print("torus dim:", s.torus_dim)

caps = fixpoint_caps(s, 1, seed=11)
print("stabilized caps:", caps.as_dict())

rep = check_theorem(s, 1, caps, trials=60, seed=11)
print("arity 1 verdict:", rep["verdict"],
      "| pairs checked:", rep["pairs_checked"],
      "| mismatches:", len(rep["mismatches"]))

rep2 = check_theorem(s, 2, fixpoint_caps(s, 2, seed=11), trials=60, seed=11)
print("arity 2 verdict:", rep2["verdict"],
      "| pairs checked:", rep2["pairs_checked"],
      "| mismatches:", len(rep2["mismatches"]))
