"""Seeded random structures, formulas, and tuples for property testing.

Structures come out in invariant-factor coordinates (relations diagonal,
divisibility chain) with an optional unimodular scramble on top; either
way they are produced through the schema validator, so everything the
generator emits is a legal input file.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .formula import Atom, FConstraint, PpFormula, PpStarFormula, Term, parse, render
from .solver import Structure, structure_from_dict
from .torus import TorusPoint, format_rational, parse_rational


def _invariant_factors(rng: random.Random, max_rank: int, max_order: int,
                       free_rank: int) -> List[int]:
    torsion = rng.randrange(0 if free_rank else 1, max_rank - free_rank + 1)
    factors: List[int] = []
    order = 1
    d = 1
    for _ in range(torsion):
        # multiply up the chain; heavy bias toward small factors
        step = rng.choice([1, 1, 2, 2, 2, 3, 4])
        d = d * step if factors else rng.choice([2, 2, 2, 3, 4, 4, 5, 6, 8])
        if order * d > max_order:
            break
        factors.append(d)
        order *= d
    return factors + [0] * free_rank


def _random_character(rng: random.Random, dims: Sequence[int], torus_dim: int,
                      max_den: int) -> List[List[str]]:
    rows = []
    for _ in range(torus_dim):
        row = []
        for d in dims:
            if d == 0:
                q = rng.choice([q for q in range(1, max_den + 1)])
            else:
                divisors = [q for q in range(1, max_den + 1) if d % q == 0]
                q = rng.choice(divisors)
            p = rng.randrange(0, q)
            row.append(format_rational(Fraction(p, q)))
        rows.append(row)
    return rows


def _elementary_ops(rng: random.Random, n: int, count: int):
    ops = []
    for _ in range(count):
        kind = rng.randrange(3)
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if kind == 0 and n > 1:
            ops.append(("swap", i, j, 0))
        elif kind == 1:
            ops.append(("neg", i, 0, 0))
        elif n > 1:
            ops.append(("add", i, j, rng.choice([-2, -1, 1, 2])))
    return ops


def _apply_ops_to_vector(vec: Sequence[int], ops) -> Tuple[int, ...]:
    # treats vec as a row vector being multiplied by the op product on the right
    v = list(vec)
    for kind, i, j, c in ops:
        if kind == "swap":
            v[i], v[j] = v[j], v[i]
        elif kind == "neg":
            v[i] = -v[i]
        else:
            v[j] += c * v[i]
    return tuple(v)


def _apply_inverse_ops_to_row(row: Sequence[Fraction], ops) -> List[Fraction]:
    # character rows transform by (U^-1)^T = product of per-op inverse
    # transposes in the SAME order the ops multiplied up U
    v = list(row)
    for kind, i, j, c in ops:
        if kind == "swap":
            v[i], v[j] = v[j], v[i]
        elif kind == "neg":
            v[i] = -v[i]
        else:
            v[i] -= c * v[j]
    return v


def random_structure(rng: random.Random, *, max_rank: int = 3, max_order: int = 32,
                     max_subgroups: int = 2, max_subgroup_arity: int = 2,
                     max_torus_dim: int = 2, max_den: int = 8,
                     allow_infinite: bool = False, scramble: bool = False) -> Structure:
    free_rank = 0
    if allow_infinite and rng.random() < 0.5:
        free_rank = rng.randrange(1, min(2, max_rank) + 1)
    dims = _invariant_factors(rng, max_rank, max_order, free_rank)
    if not dims:
        dims = [rng.choice([2, 3, 4])]
    n = len(dims)
    torus_dim = rng.randrange(0, max_torus_dim + 1)
    ops = _elementary_ops(rng, n, rng.randrange(1, 4)) if scramble else []

    relations = [_apply_ops_to_vector([d if t == i else 0 for t in range(n)], ops)
                 for i, d in enumerate(dims) if d != 0]

    subgroups = {}
    for si in range(rng.randrange(0, max_subgroups + 1)):
        arity = rng.randrange(1, max_subgroup_arity + 1)
        gens = []
        for _ in range(rng.randrange(0, 3)):
            raw = [rng.randrange(-4, 5) for _ in range(arity * n)]
            gens.append([x for b in range(arity)
                         for x in _apply_ops_to_vector(raw[b * n:(b + 1) * n], ops)])
        for rel in relations:
            for b in range(arity):
                row = [0] * (arity * n)
                row[b * n:(b + 1) * n] = list(rel)
                gens.append(row)
        subgroups[f"P{si}"] = {"arity": arity, "generators": gens}

    frac_rows = [[parse_rational(cell, strict=True) for cell in row]
                 for row in _random_character(rng, dims, torus_dim, max_den)]
    matrix = [[format_rational(c % 1) for c in _apply_inverse_ops_to_row(row, ops)]
              for row in frac_rows]

    parameters = {}
    if rng.random() < 0.5:
        parameters["a"] = list(_apply_ops_to_vector(
            [rng.randrange(0, max(d, 3)) for d in dims], ops))
    if rng.random() < 0.3:
        parameters["one"] = list(_apply_ops_to_vector(
            [1 if i == 0 else 0 for i in range(n)], ops))

    data = {
        "name": f"rnd_{rng.getrandbits(24):06x}",
        "ambient_rank": n,
        "relations": [list(r) for r in relations],
        "subgroups": subgroups,
        "character": {"torus_dim": torus_dim, "matrix": matrix},
        "parameters": parameters,
    }
    return structure_from_dict(data)


def random_finite_structure(rng: random.Random, **kw) -> Structure:
    kw.setdefault("allow_infinite", False)
    return random_structure(rng, **kw)


def random_tuple(rng: random.Random, s: Structure, arity: int) -> Tuple[int, ...]:
    if s.is_finite:
        elems = s.elements()
        return tuple(x for _ in range(arity) for x in rng.choice(elems))
    return tuple(rng.randrange(-6, 7) for _ in range(arity * s.ambient_rank))


def random_pp(rng: random.Random, s: Structure, arity: int, *, max_bound: int = 3,
              max_atoms: int = 3, max_coeff: int = 4) -> PpFormula:
    k = rng.randrange(0, max_bound + 1)
    free = tuple(f"x{i}" for i in range(arity))
    bound = tuple(f"y{i}" for i in range(k))
    params = [p for p in s.parameters if rng.random() < 0.4]
    preds = [(name, ar) for name, (ar, _) in s.subgroups.items()] + [("Eq", 1)]
    atoms = []
    for _ in range(rng.randrange(1, max_atoms + 1)):
        pred, ar = rng.choice(preds)
        terms = []
        for _ in range(ar):
            summands = []
            for v in free + bound:
                c = rng.randrange(-max_coeff, max_coeff + 1)
                if c and rng.random() < 0.7:
                    summands.append((v, c))
            for p in params:
                if rng.random() < 0.5:
                    summands.append((p, rng.randrange(-max_coeff, max_coeff + 1)))
            const = 0
            if "one" in s.parameters and rng.random() < 0.2:
                const = rng.randrange(-2, 3)
            terms.append(Term(tuple(summands), const))
        atoms.append(Atom(pred, tuple(terms)))
    used = {v for a in atoms for t in a.terms for v, _ in t.summands}
    missing = [v for v in free if v not in used]
    if missing:
        # every requested free variable must occur somewhere
        atoms.append(Atom("Eq", (Term(tuple((v, 1) for v in missing), 0),)))
    raw = PpFormula(free, bound, tuple(atoms))
    # canonicalize variable order so parse(render(.)) is the identity
    out = parse(render(raw), s.signature())
    assert isinstance(out, PpFormula)
    return out


def random_ppstar(rng: random.Random, s: Structure, arity: int, *,
                  max_bound: int = 2, max_atoms: int = 3, max_coeff: int = 3,
                  max_constraints: int = 2) -> PpStarFormula:
    core = random_pp(rng, s, arity, max_bound=max_bound, max_atoms=max_atoms,
                     max_coeff=max_coeff)
    d = s.torus_dim
    names = list(core.free_names) + list(core.bound_names)
    cons = []
    if d:
        for v in rng.sample(names, min(len(names), rng.randrange(0, max_constraints + 1))):
            if rng.random() < 0.6:
                # reachable value: the image of some actual element
                pt = s.f_value(random_tuple(rng, s, 1))
            else:
                pt = TorusPoint.make([Fraction(rng.randrange(0, 8), rng.choice([1, 2, 3, 4, 6, 8]))
                                      for _ in range(d)])
            cons.append(FConstraint(v, pt))
    raw = PpStarFormula(core, tuple(cons))
    out = parse(render(raw), s.signature())
    assert isinstance(out, PpStarFormula) or not cons
    return out if isinstance(out, PpStarFormula) else PpStarFormula(out, ())
