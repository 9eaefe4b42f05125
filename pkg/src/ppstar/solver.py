"""Structures, pp/pp* evaluation, character images, and coset coverage.

A structure is an abelian group presented as Z^N modulo a relation
lattice, together with named subgroups of finite powers, a rational
character into the torus T^d, and named parameter elements.  Everything
downstream identifies a definable set with an integer lattice coset in
the cover Z^{mN}; because every stored lattice contains the relation
lattice in each coordinate block, lift-level coset arithmetic computes
quotient-level truth exactly.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce as _reduce
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

from .errors import DimensionError, SchemaError
from .formula import (
    EQ,
    ONE,
    Formula,
    NegPpFormula,
    Normalized,
    PpFormula,
    PpStarFormula,
    RESERVED,
    Signature,
    normalize,
)
from .lattice import (
    INFINITE,
    IndexValue,
    IntMatrix,
    Lattice,
    SolveContext,
    coset_intersect,
    direct_sum,
    index_of,
    intersect,
    project,
    solve,
)
from .torus import (
    ClosedTorusSubgroup,
    TorusCoset,
    TorusPoint,
    approx_member,
    closure_of,
    format_rational,
    member,
    parse_rational,
)

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


# ---------------------------------------------------------------------------
# structures


class Structure:
    """Immutable abelian structure with a rational character.

    The group is A = Z^N / relations.  Subgroup predicates of arity k are
    lattices in Z^{kN} that contain relations in every coordinate block,
    so membership of a lift decides membership of the class.
    """

    def __init__(self, name: str, ambient_rank: int, relations: Lattice,
                 subgroups: Mapping[str, Tuple[int, Lattice]],
                 torus_dim: int, character_rows: Sequence[Sequence[Fraction]],
                 parameters: Mapping[str, Tuple[int, ...]]):
        self.name = name
        self.ambient_rank = ambient_rank
        self.relations = relations
        self.subgroups = dict(subgroups)
        self.torus_dim = torus_dim
        self.character_rows = tuple(tuple(row) for row in character_rows)
        self.parameters = {k: tuple(v) for k, v in parameters.items()}
        self.is_finite = relations.rank == ambient_rank
        self._rel_powers: Dict[int, Lattice] = {1: relations}

    def rel_power(self, k: int) -> Lattice:
        if k not in self._rel_powers:
            self._rel_powers[k] = direct_sum([self.relations] * k) if k else Lattice.full(0)
        return self._rel_powers[k]

    def signature(self) -> Signature:
        preds = {nm: arity for nm, (arity, _) in self.subgroups.items()}
        return Signature(preds, tuple(self.parameters), self.torus_dim)

    def predicate_lattice(self, name: str) -> Tuple[int, Lattice]:
        if name == EQ:
            return 1, self.relations
        arity, lat = self.subgroups[name]
        return arity, lat

    def order(self) -> IndexValue:
        if not self.is_finite:
            return INFINITE
        return index_of(self.relations, Lattice.full(self.ambient_rank))

    def elements(self):
        """Canonical residues mod the relation lattice, in lexicographic order."""
        if not self.is_finite:
            raise ValueError("infinite structure has no element enumeration")
        diag = [self.relations.basis.entries[i][i] for i in range(self.ambient_rank)]
        return [tuple(t) for t in itertools.product(*[range(d) for d in diag])]

    def tuples(self, m: int):
        """All canonical m-tuples (concatenated residue vectors)."""
        for combo in itertools.product(self.elements(), repeat=m):
            yield tuple(x for block in combo for x in block)

    def reduce(self, vec: Sequence[int]) -> Tuple[int, ...]:
        n = self.ambient_rank
        if len(vec) % n:
            raise DimensionError(f"vector length {len(vec)} is not a multiple of {n}")
        return self.rel_power(len(vec) // n).reduce(tuple(int(x) for x in vec))

    def f_value(self, vec: Sequence[int]) -> TorusPoint:
        """Blockwise character value of an m-tuple lift: a point of T^{m*d}."""
        n = self.ambient_rank
        if len(vec) % n:
            raise DimensionError(f"vector length {len(vec)} is not a multiple of {n}")
        coords = []
        for b in range(len(vec) // n):
            block = vec[b * n:(b + 1) * n]
            for row in self.character_rows:
                coords.append(sum(c * x for c, x in zip(row, block)))
        return TorusPoint.make(coords)

    def invariant_factors(self):
        """Nontrivial invariant factors of A when finite (0 marks free ranks)."""
        from .lattice import snf
        if self.relations.rank == 0:
            return (0,) * self.ambient_rank
        _, d, _ = snf(self.relations.basis)
        facs = [d.entries[i][i] for i in range(min(d.rows, d.cols))]
        facs += [0] * (self.ambient_rank - len(facs))
        return tuple(f for f in facs if f != 1)


# ---------------------------------------------------------------------------
# schema


_TOP_KEYS = ("name", "ambient_rank", "relations", "subgroups", "character", "parameters")


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, "expected an integer")
    return value


def _int_row(value, width: int, path: str) -> Tuple[int, ...]:
    if not isinstance(value, list):
        raise SchemaError(path, "expected a list of integers")
    if len(value) != width:
        raise SchemaError(path, f"expected {width} entries, got {len(value)}")
    return tuple(_int(x, f"{path}[{i}]") for i, x in enumerate(value))


def _valid_name(name, path: str) -> str:
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise SchemaError(path, f"invalid name {name!r}")
    if name in RESERVED or name == EQ:
        raise SchemaError(path, f"name {name!r} is reserved")
    return name


def structure_from_dict(data) -> Structure:
    if not isinstance(data, dict):
        raise SchemaError("$", "expected a JSON object")
    for key in _TOP_KEYS:
        if key not in data:
            raise SchemaError(key, "required key missing")
    for key in data:
        if key not in _TOP_KEYS:
            raise SchemaError(key, "unknown key")

    name = data["name"]
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "expected a non-empty string")
    n = _int(data["ambient_rank"], "ambient_rank")
    if n < 1:
        raise SchemaError("ambient_rank", "must be at least 1")

    if not isinstance(data["relations"], list):
        raise SchemaError("relations", "expected a list of rows")
    rel_rows = [_int_row(r, n, f"relations[{i}]") for i, r in enumerate(data["relations"])]
    relations = Lattice.from_rows(n, rel_rows)

    if not isinstance(data["subgroups"], dict):
        raise SchemaError("subgroups", "expected an object")
    subgroups = {}
    for nm, body in data["subgroups"].items():
        _valid_name(nm, f"subgroups.{nm}")
        if not isinstance(body, dict) or set(body) != {"arity", "generators"}:
            raise SchemaError(f"subgroups.{nm}", 'expected keys "arity" and "generators"')
        arity = _int(body["arity"], f"subgroups.{nm}.arity")
        if arity < 1:
            raise SchemaError(f"subgroups.{nm}.arity", "must be at least 1")
        if not isinstance(body["generators"], list):
            raise SchemaError(f"subgroups.{nm}.generators", "expected a list of rows")
        rows = [_int_row(r, arity * n, f"subgroups.{nm}.generators[{i}]")
                for i, r in enumerate(body["generators"])]
        lat = Lattice.from_rows(arity * n, rows)
        rel_k = direct_sum([relations] * arity)
        if not lat.contains_lattice(rel_k):
            raise SchemaError(f"subgroups.{nm}.generators",
                              "generated lattice must contain the relation lattice in every coordinate block")
        subgroups[nm] = (arity, lat)

    char = data["character"]
    if not isinstance(char, dict) or set(char) != {"torus_dim", "matrix"}:
        raise SchemaError("character", 'expected keys "torus_dim" and "matrix"')
    d = _int(char["torus_dim"], "character.torus_dim")
    if d < 0:
        raise SchemaError("character.torus_dim", "must be non-negative")
    if not isinstance(char["matrix"], list) or len(char["matrix"]) != d:
        raise SchemaError("character.matrix", f"expected {d} rows")
    f_rows = []
    for i, row in enumerate(char["matrix"]):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"character.matrix[{i}]", f"expected {n} entries")
        out = []
        for j, cell in enumerate(row):
            if not isinstance(cell, str):
                raise SchemaError(f"character.matrix[{i}][{j}]", 'expected a "p/q" string')
            try:
                out.append(parse_rational(cell, strict=True))
            except ValueError as exc:
                raise SchemaError(f"character.matrix[{i}][{j}]", str(exc))
        f_rows.append(tuple(out))
    for r in relations.rows():
        vals = [sum(c * x for c, x in zip(row, r)) for row in f_rows]
        if any(v.denominator != 1 for v in vals):
            shown = ", ".join(str(v) for v in vals)
            raise SchemaError("character.matrix",
                              f"not a homomorphism: F*{list(r)} = [{shown}] is not integral")

    if not isinstance(data["parameters"], dict):
        raise SchemaError("parameters", "expected an object")
    parameters = {}
    for nm, vec in data["parameters"].items():
        _valid_name(nm, f"parameters.{nm}")
        if nm in subgroups:
            raise SchemaError(f"parameters.{nm}", "name already used for a subgroup")
        parameters[nm] = _int_row(vec, n, f"parameters.{nm}")

    return Structure(name, n, relations, subgroups, d, f_rows, parameters)


def load_structure(path: str) -> Structure:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise SchemaError("$", f"cannot read {path}: {exc}")
    try:
        data = json.loads(raw)
    except ValueError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}")
    return structure_from_dict(data)


def structure_to_dict(s: Structure) -> dict:
    return {
        "name": s.name,
        "ambient_rank": s.ambient_rank,
        "relations": [list(r) for r in s.relations.rows()],
        "subgroups": {
            nm: {"arity": arity, "generators": [list(r) for r in lat.rows()]}
            for nm, (arity, lat) in s.subgroups.items()
        },
        "character": {
            "torus_dim": s.torus_dim,
            "matrix": [[format_rational(c) for c in row] for row in s.character_rows],
        },
        "parameters": {nm: list(v) for nm, v in s.parameters.items()},
    }


# ---------------------------------------------------------------------------
# definable cosets


@dataclass(frozen=True)
class DefinableCoset:
    """Solution set of a pp formula: a lattice coset in the lift Z^{mN}, or empty.

    The group part always contains the relation lattice in each block, and
    the representative is stored reduced mod the group, so dataclass
    equality coincides with equality of the defined subsets of A^m.
    """

    arity: int
    ambient: int
    rep: Optional[Tuple[int, ...]]
    group: Optional[Lattice]

    @classmethod
    def of(cls, arity: int, rep: Sequence[int], group: Lattice) -> "DefinableCoset":
        return cls(arity, group.ambient, group.reduce(tuple(int(x) for x in rep)), group)

    @classmethod
    def empty(cls, arity: int, ambient: int) -> "DefinableCoset":
        return cls(arity, ambient, None, None)

    @property
    def is_empty(self) -> bool:
        return self.rep is None

    def contains(self, vec: Sequence[int]) -> bool:
        if self.is_empty:
            return False
        if len(vec) != self.ambient:
            raise DimensionError(f"expected {self.ambient} coordinates, got {len(vec)}")
        return self.group.member(tuple(int(x) - r for x, r in zip(vec, self.rep)))


def coset_meet(a: DefinableCoset, b: DefinableCoset) -> DefinableCoset:
    if a.arity != b.arity or a.ambient != b.ambient:
        raise DimensionError("coset arity mismatch")
    if a.is_empty or b.is_empty:
        return DefinableCoset.empty(a.arity, a.ambient)
    got = coset_intersect(a.rep, a.group, b.rep, b.group)
    if got is None:
        return DefinableCoset.empty(a.arity, a.ambient)
    rep, lat = got
    return DefinableCoset.of(a.arity, rep, lat)


# ---------------------------------------------------------------------------
# evaluation


def _vstack_all(mats):
    return _reduce(lambda x, y: x.vstack(y), mats)


class CompiledPp:
    """One pp formula's atoms lifted to a single lattice system.

    The system is  M_free * a + M_bound * y  in  shift + target, with the
    free/bound column blocks kept apart so the formula can be evaluated
    both as a relation in all variables and at a fixed argument tuple.
    Solve contexts are prepared lazily and reused across tuples.
    """

    def __init__(self, s: Structure, norm: Normalized, args: Optional[Mapping[str, Sequence[int]]] = None):
        if norm.negated:
            raise TypeError("cannot compile a negated formula")
        n = s.ambient_rank
        m, k = norm.free_arity, norm.bound_arity
        values = dict(s.parameters)
        if args:
            for nm, vec in args.items():
                if nm not in values:
                    raise ValueError(f"unknown parameter {nm!r}")
                if len(vec) != n:
                    raise DimensionError(f"parameter {nm!r} needs {n} coordinates")
                values[nm] = tuple(int(x) for x in vec)
        mats_f, mats_b, targets = [], [], []
        shift = []
        for na in norm.atoms:
            arity, lat = s.predicate_lattice(na.pred)
            rows = na.matrix.entries
            if na.matrix.rows != arity:
                raise DimensionError(f"{na.pred} expects arity {arity}")
            cf = IntMatrix(arity, m, tuple(r[:m] for r in rows))
            cb = IntMatrix(arity, k, tuple(r[m:m + k] for r in rows))
            mats_f.append(cf.kron_identity(n))
            mats_b.append(cb.kron_identity(n))
            targets.append(lat)
            for r in rows:
                s0 = [0] * n
                for j, pname in enumerate(norm.param_names):
                    c = r[m + k + j]
                    if c:
                        val = values[pname]
                        for t in range(n):
                            s0[t] += c * val[t]
                if r[-1]:
                    if ONE not in values:
                        raise ValueError('integer constants need a parameter named "one"')
                    for t in range(n):
                        s0[t] += r[-1] * values[ONE][t]
                shift.extend(-x for x in s0)
        self.structure = s
        self.m, self.k = m, k
        self.f_constraints = norm.f_constraints
        if mats_f:
            self.m_free = _vstack_all(mats_f)
            self.m_bound = _vstack_all(mats_b)
            self.target = direct_sum(targets)
        else:
            self.m_free = IntMatrix(0, m * n, ())
            self.m_bound = IntMatrix(0, k * n, ())
            self.target = Lattice.from_rows(0, [])
        self.shift = tuple(shift)
        self._full_ctx: Optional[SolveContext] = None
        self._bound_ctx: Optional[SolveContext] = None

    def _full(self) -> SolveContext:
        if self._full_ctx is None:
            self._full_ctx = SolveContext(self.m_free.hstack(self.m_bound), self.target)
        return self._full_ctx

    def _bound(self) -> SolveContext:
        if self._bound_ctx is None:
            self._bound_ctx = SolveContext(self.m_bound, self.target)
        return self._bound_ctx

    def solution(self) -> DefinableCoset:
        """Solution set over the free variables, bound block projected out."""
        n = self.structure.ambient_rank
        width = self.m * n
        ctx = self._full()
        rep = ctx.solve_shift(self.shift)
        if rep is None:
            return DefinableCoset.empty(self.m, width)
        return DefinableCoset.of(self.m, rep[:width], project(ctx.kernel, range(width)))

    def witness_group(self) -> Lattice:
        """Group part of every nonempty witness coset (independent of the tuple)."""
        return self._bound().kernel

    def at(self, a_vec: Sequence[int]) -> DefinableCoset:
        """Witness coset over the bound variables at a fixed free tuple."""
        n = self.structure.ambient_rank
        if len(a_vec) != self.m * n:
            raise DimensionError(f"expected {self.m * n} coordinates, got {len(a_vec)}")
        moved = self.m_free.mat_vec(tuple(int(x) for x in a_vec))
        shift = tuple(s - t for s, t in zip(self.shift, moved))
        rep = self._bound().solve_shift(shift)
        if rep is None:
            return DefinableCoset.empty(self.k, self.k * n)
        return DefinableCoset.of(self.k, rep, self._bound().kernel)


def _to_normalized(s: Structure, phi) -> Normalized:
    if isinstance(phi, Normalized):
        return phi
    return normalize(phi, s.signature())


def eval_pp(s: Structure, phi, args: Optional[Mapping[str, Sequence[int]]] = None) -> DefinableCoset:
    """Solution set of a pp formula as a coset in the lift of A^m."""
    if isinstance(phi, (PpStarFormula, NegPpFormula)):
        raise TypeError("eval_pp takes a pp formula without f-constraints or negation")
    norm = _to_normalized(s, phi)
    if norm.negated or norm.f_constraints:
        raise TypeError("eval_pp takes a pp formula without f-constraints or negation")
    return CompiledPp(s, norm, args).solution()


def torus_image(s: Structure, c: DefinableCoset) -> TorusCoset:
    """Closure of the blockwise character image of a definable coset.

    Exact for rational characters: the image group is generated by the
    finitely many finite-order points f(basis row), so it is closed.
    """
    dim = c.arity * s.torus_dim
    if c.is_empty:
        return TorusCoset.empty(dim)
    gens = [s.f_value(r) for r in c.group.rows()]
    return TorusCoset.make(s.f_value(c.rep), closure_of(gens, dim))


def satisfies_ppstar(s: Structure, psi, vec: Sequence[int],
                     args: Optional[Mapping[str, Sequence[int]]] = None) -> bool:
    """Exact satisfaction of a pp* (or plain pp) formula at a tuple."""
    if isinstance(psi, NegPpFormula):
        raise TypeError("use satisfies() for negated formulas")
    norm = _to_normalized(s, psi)
    n = s.ambient_rank
    m = norm.free_arity
    if len(vec) != m * n:
        raise DimensionError(f"expected {m * n} coordinates, got {len(vec)}")
    vec = tuple(int(x) for x in vec)
    free_cons = [(i, pt) for i, pt in norm.f_constraints if i < m]
    bound_cons = [(i - m, pt) for i, pt in norm.f_constraints if i >= m]
    for i, pt in free_cons:
        if s.f_value(vec[i * n:(i + 1) * n]) != pt:
            return False
    comp = CompiledPp(s, norm, args)
    witness = comp.at(vec)
    if witness.is_empty:
        return False
    if not bound_cons:
        return True
    coords = [j * n + t for j, _ in bound_cons for t in range(n)]
    sub = DefinableCoset.of(len(bound_cons),
                            tuple(witness.rep[c] for c in coords),
                            project(witness.group, coords))
    point = TorusPoint.make([c for _, pt in bound_cons for c in pt.coords])
    return member(point, torus_image(s, sub))


def satisfies(s: Structure, ast: Formula, vec: Sequence[int],
              args: Optional[Mapping[str, Sequence[int]]] = None) -> bool:
    if isinstance(ast, NegPpFormula):
        return not satisfies_ppstar(s, ast.inner, vec, args)
    return satisfies_ppstar(s, ast, vec, args)


def satisfies_approx(s: Structure, ast: Formula, vec: Sequence[int], eps: Fraction,
                     args: Optional[Mapping[str, Sequence[int]]] = None) -> bool:
    """Quantifier-free satisfaction with f-value checks relaxed to distance eps.

    Group atoms stay exact; only f-constraints are softened.  Quantified
    formulas are rejected: approximating under an existential is a
    different (and unimplemented) notion.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if isinstance(ast, NegPpFormula):
        inner = _to_normalized(s, ast.inner)
        if inner.bound_arity:
            raise ValueError("approximate satisfaction needs a quantifier-free formula")
        return not satisfies_approx(s, ast.inner, vec, eps, args)
    norm = _to_normalized(s, ast)
    if norm.bound_arity:
        raise ValueError("approximate satisfaction needs a quantifier-free formula")
    n = s.ambient_rank
    m = norm.free_arity
    if len(vec) != m * n:
        raise DimensionError(f"expected {m * n} coordinates, got {len(vec)}")
    vec = tuple(int(x) for x in vec)
    if CompiledPp(s, norm, args).at(vec).is_empty:
        return False
    for i, pt in norm.f_constraints:
        got = s.f_value(vec[i * n:(i + 1) * n])
        if not approx_member(got, TorusCoset.point(pt), eps):
            return False
    return True


# ---------------------------------------------------------------------------
# coverage


def cover_decide(x: DefinableCoset, cover: Sequence[DefinableCoset]) -> bool:
    """Decide x subset-of union(cover) by filtered inclusion-exclusion.

    Cosets whose group meets x's group in infinite index cannot help cover
    (finitely many translates never exhaust a coset of infinite index), so
    they are discarded first; the remaining counts are all finite and the
    alternating sum counts the uncovered part of x.
    """
    if x.is_empty:
        raise ValueError("coverage target must be nonempty")
    for c in cover:
        if c.arity != x.arity or c.ambient != x.ambient:
            raise DimensionError("cover coset arity mismatch")
    h = x.group
    survivors = []
    for c in cover:
        if c.is_empty:
            continue
        if index_of(intersect(h, c.group), h) is INFINITE:
            continue
        survivors.append(c)
    k0 = h
    for c in survivors:
        k0 = intersect(k0, c.group)
    total = 0
    for mask in range(1 << len(survivors)):
        cur = x
        for i in range(len(survivors)):
            if mask >> i & 1:
                cur = coset_meet(cur, survivors[i])
                if cur.is_empty:
                    break
        if cur.is_empty:
            continue
        count = index_of(k0, cur.group)
        total += -count if bin(mask).count("1") % 2 else count
    return total == 0


# ---------------------------------------------------------------------------
# kernel and fibers


def kernel_and_fiber(s: Structure, point: Optional[TorusPoint] = None) -> DefinableCoset:
    """Kernel of the character (point=None) or the fiber over a torus point."""
    n = s.ambient_rank
    d = s.torus_dim
    if point is not None and point.dim != d:
        raise DimensionError(f"expected a point of T^{d}")
    if d == 0:
        return DefinableCoset.of(1, (0,) * n, Lattice.full(n))
    rows = []
    shift = []
    moduli = []
    for i, frow in enumerate(s.character_rows):
        c = point.coords[i] if point is not None else Fraction(0)
        scale = 1
        for v in list(frow) + [c]:
            scale = math.lcm(scale, v.denominator)
        rows.append(tuple(int(v * scale) for v in frow))
        shift.append(int(c * scale))
        moduli.append(scale)
    got = solve(IntMatrix.from_rows(rows, n), Lattice.diagonal(moduli), shift)
    if got is None:
        return DefinableCoset.empty(1, n)
    rep, lat = got
    return DefinableCoset.of(1, rep, lat)
