"""Parsing, rendering, and normalization of pp / pp* / negated-pp formulas.

Concrete syntax (whitespace-insensitive):

    formula := ['!'] ('E' varlist '.')* conj
    conj    := atom ('&' atom)*
    atom    := NAME '(' term (',' term)* ')'
             | 'f' '(' VAR ')' '=' tpoint
             | term '=' term
    term    := ['-'] summand (('+'|'-') ['-'] summand)*
    summand := INT ['*' NAME] | NAME
    tpoint  := '(' rational (',' rational)* ')' | rational

``term = term`` is sugar for the built-in equality predicate ``Eq`` applied
to the difference.  ``E`` and ``f`` are reserved words.  A bare integer
summand stands for that multiple of the designated generator and is only
accepted when the signature declares a parameter named ``one``.

Free variables are ordered by first occurrence in the conjunction of
predicate atoms, followed by variables that occur only in f-constraints.
This matches first occurrence in the canonical rendering, so
``parse(render(ast)) == ast`` for every parse-produced AST.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .errors import ParseError
from .lattice import IntMatrix
from .torus import TorusPoint, format_rational

EQ = "Eq"
ONE = "one"
RESERVED = ("E", "f")


class Signature:
    """Predicate arities, parameter names, and torus dimension for parsing."""

    def __init__(self, predicates=None, parameters=(), torus_dim: int = 0):
        preds = {EQ: 1}
        preds.update(predicates or {})
        if preds[EQ] != 1:
            raise ValueError("Eq is built in with arity 1")
        self.predicates = preds
        self.parameters = tuple(parameters)
        self.torus_dim = torus_dim
        for name in list(preds) + list(self.parameters):
            if name in RESERVED:
                raise ValueError(f"name {name!r} is reserved")
        for name, arity in preds.items():
            if arity < 1:
                raise ValueError(f"predicate {name!r} needs positive arity")
        overlap = set(preds) & set(self.parameters)
        if overlap:
            raise ValueError(f"used as both predicate and parameter: {sorted(overlap)}")


@dataclass(frozen=True)
class Term:
    """Integer-linear combination of variables and parameters, plus a constant.

    Summands are kept in textual order and never combined, so the AST is a
    faithful image of the input; combination happens in normalize().
    """

    summands: tuple = ()  # ((name, coeff), ...)
    const: int = 0


@dataclass(frozen=True)
class Atom:
    pred: str
    terms: tuple


@dataclass(frozen=True)
class FConstraint:
    var: str
    value: TorusPoint


@dataclass(frozen=True)
class PpFormula:
    free_names: tuple
    bound_names: tuple
    atoms: tuple


@dataclass(frozen=True)
class PpStarFormula:
    core: PpFormula
    f_constraints: tuple  # sorted by variable index, free block first


@dataclass(frozen=True)
class NegPpFormula:
    inner: PpFormula


Formula = Union[PpFormula, PpStarFormula, NegPpFormula]


# ---------------------------------------------------------------------------
# scanner


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def mark(self) -> int:
        self._skip_ws()
        return self.pos

    def eof(self) -> bool:
        self._skip_ws()
        return self.pos >= len(self.text)

    def take(self, sym: str) -> bool:
        self._skip_ws()
        if self.text.startswith(sym, self.pos):
            self.pos += len(sym)
            return True
        return False

    def expect(self, sym: str):
        if not self.take(sym):
            raise ParseError(self.mark(), f"expected {sym!r}")

    def peek_name(self) -> Optional[str]:
        save = self.pos
        name = self.name()
        self.pos = save
        return name

    def name(self) -> Optional[str]:
        self._skip_ws()
        i = self.pos
        if i >= len(self.text):
            return None
        ch = self.text[i]
        if not (ch.isalpha() or ch == "_"):
            return None
        j = i + 1
        while j < len(self.text) and (self.text[j].isalnum() or self.text[j] == "_"):
            j += 1
        self.pos = j
        return self.text[i:j]

    def integer(self) -> Optional[int]:
        self._skip_ws()
        i = self.pos
        j = i
        while j < len(self.text) and self.text[j].isdigit():
            j += 1
        if j == i:
            return None
        self.pos = j
        return int(self.text[i:j])


# ---------------------------------------------------------------------------
# parser


class _Builder:
    def __init__(self, sig: Signature, bound):
        self.sig = sig
        self.bound = bound
        self.atom_free = []   # free vars in order of first occurrence in atoms
        self.fcons_free = []  # free vars first seen in f-constraints
        self.atoms = []
        self.fcons = []       # (position, FConstraint)

    def resolve_var(self, name: str, pos: int, in_atom: bool):
        if name in RESERVED:
            raise ParseError(pos, f"reserved name {name!r}")
        if name in self.sig.predicates:
            raise ParseError(pos, f"predicate {name!r} used as a variable")
        if name in self.sig.parameters:
            return  # parameters resolve without registration
        if name not in self.bound:
            if in_atom:
                if name not in self.atom_free:
                    self.atom_free.append(name)
            elif name not in self.atom_free and name not in self.fcons_free:
                self.fcons_free.append(name)


def _parse_term(sc: _Scanner, st: _Builder) -> Term:
    summands = []
    const = 0
    sign = -1 if sc.take("-") else 1
    while True:
        pos = sc.mark()
        n = sc.integer()
        if n is not None:
            if sc.take("*"):
                vpos = sc.mark()
                v = sc.name()
                if v is None:
                    raise ParseError(vpos, "expected a name after '*'")
                st.resolve_var(v, vpos, in_atom=True)
                summands.append((v, sign * n))
            else:
                if n != 0 and ONE not in st.sig.parameters:
                    raise ParseError(pos, 'integer constant requires a parameter named "one"')
                const += sign * n
        else:
            v = sc.name()
            if v is None:
                raise ParseError(pos, "expected a term")
            st.resolve_var(v, pos, in_atom=True)
            summands.append((v, sign))
        if sc.take("+"):
            sign = 1
        elif sc.take("-"):
            sign = -1
        else:
            break
        if sc.take("-"):
            sign = -sign
    return Term(tuple(summands), const)


def _sub_terms(a: Term, b: Term) -> Term:
    return Term(a.summands + tuple((v, -c) for v, c in b.summands), a.const - b.const)


def _parse_rational(sc: _Scanner) -> Fraction:
    pos = sc.mark()
    neg = sc.take("-")
    num = sc.integer()
    if num is None:
        raise ParseError(pos, "expected a rational")
    if sc.take("/"):
        den = sc.integer()
        if den is None:
            raise ParseError(sc.mark(), "expected a denominator")
        if den == 0:
            raise ParseError(pos, "zero denominator")
        val = Fraction(num, den)
    else:
        val = Fraction(num)
    return -val if neg else val


def _parse_tpoint(sc: _Scanner, dim: int) -> TorusPoint:
    pos = sc.mark()
    coords = []
    if sc.take("("):
        if not sc.take(")"):
            coords.append(_parse_rational(sc))
            while sc.take(","):
                coords.append(_parse_rational(sc))
            sc.expect(")")
    else:
        coords.append(_parse_rational(sc))
    if len(coords) != dim:
        raise ParseError(pos, f"torus point has {len(coords)} coordinate(s), expected {dim}")
    return TorusPoint.make(coords)


def _parse_atom(sc: _Scanner, st: _Builder):
    pos = sc.mark()
    nm = sc.peek_name()
    if nm == "f":
        sc.name()
        sc.expect("(")
        vpos = sc.mark()
        v = sc.name()
        if v is None:
            raise ParseError(vpos, "expected a variable")
        if v in RESERVED or v in st.sig.predicates or v in st.sig.parameters:
            raise ParseError(vpos, "f-constraint must apply to a variable")
        st.resolve_var(v, vpos, in_atom=False)
        sc.expect(")")
        sc.expect("=")
        value = _parse_tpoint(sc, st.sig.torus_dim)
        if any(fc.var == v for _, fc in st.fcons):
            raise ParseError(pos, f"duplicate f-constraint on {v!r}")
        st.fcons.append((pos, FConstraint(v, value)))
        return
    if nm is not None and nm in st.sig.predicates:
        sc.name()
        sc.expect("(")
        terms = [_parse_term(sc, st)]
        while sc.take(","):
            terms.append(_parse_term(sc, st))
        sc.expect(")")
        want = st.sig.predicates[nm]
        if len(terms) != want:
            raise ParseError(pos, f"{nm} expects {want} argument(s), got {len(terms)}")
        st.atoms.append(Atom(nm, tuple(terms)))
        return
    if nm is not None:
        save = sc.pos
        sc.name()
        if sc.take("("):
            raise ParseError(pos, f"unknown predicate {nm!r}")
        sc.pos = save
    left = _parse_term(sc, st)
    sc.expect("=")
    right = _parse_term(sc, st)
    st.atoms.append(Atom(EQ, (_sub_terms(left, right),)))


def parse(text: str, signature: Signature) -> Formula:
    sc = _Scanner(text)
    negated = sc.take("!")
    bound = []
    while sc.peek_name() == "E":
        sc.name()
        while True:
            pos = sc.mark()
            v = sc.name()
            if v is None:
                raise ParseError(pos, "expected a variable after 'E'")
            if v in RESERVED:
                raise ParseError(pos, f"reserved name {v!r}")
            if v in signature.predicates or v in signature.parameters:
                raise ParseError(pos, f"{v!r} is already a predicate or parameter")
            if v in bound:
                raise ParseError(pos, f"duplicate bound variable {v!r}")
            bound.append(v)
            if not sc.take(","):
                break
        sc.expect(".")
    st = _Builder(signature, bound)
    _parse_atom(sc, st)
    while sc.take("&"):
        _parse_atom(sc, st)
    if not sc.eof():
        raise ParseError(sc.mark(), "unexpected trailing input")
    if negated and st.fcons:
        raise ParseError(st.fcons[0][0], "f-constraint not allowed under negation")
    free = tuple(st.atom_free) + tuple(v for v in st.fcons_free if v not in st.atom_free)
    core = PpFormula(free, tuple(bound), tuple(st.atoms))
    if negated:
        return NegPpFormula(core)
    if st.fcons:
        def idx(v):
            if v in free:
                return free.index(v)
            return len(free) + bound.index(v)
        ordered = tuple(sorted((fc for _, fc in st.fcons), key=lambda fc: idx(fc.var)))
        return PpStarFormula(core, ordered)
    return core


# ---------------------------------------------------------------------------
# rendering


def _render_summand(name: str, coeff: int) -> str:
    if coeff == 1:
        return name
    if coeff == -1:
        return "-" + name
    return f"{coeff}*{name}"


def _render_term(t: Term) -> str:
    bits = [_render_summand(v, c) for v, c in t.summands]
    if t.const != 0 or not bits:
        bits.append(str(t.const))
    return " + ".join(bits)


def _render_tpoint(p: TorusPoint) -> str:
    if p.dim == 1:
        return format_rational(p.coords[0])
    return "(" + ", ".join(format_rational(c) for c in p.coords) + ")"


def _render_pp(pp: PpFormula, fcons) -> str:
    prefix = "".join(f"E {b}. " for b in pp.bound_names)
    pieces = [f"{a.pred}({', '.join(_render_term(t) for t in a.terms)})" for a in pp.atoms]
    pieces += [f"f({fc.var}) = {_render_tpoint(fc.value)}" for fc in fcons]
    if not pieces:
        pieces = ["Eq(0)"]
    return prefix + " & ".join(pieces)


def render(ast: Formula) -> str:
    if isinstance(ast, NegPpFormula):
        return "! " + _render_pp(ast.inner, ())
    if isinstance(ast, PpStarFormula):
        return _render_pp(ast.core, ast.f_constraints)
    return _render_pp(ast, ())


# ---------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class NormalizedAtom:
    pred: str
    matrix: IntMatrix  # rows = predicate arity; columns = free | bound | params | const


@dataclass(frozen=True)
class Normalized:
    formula: Formula
    free_arity: int
    bound_arity: int
    param_names: tuple
    atoms: tuple            # NormalizedAtom
    f_constraints: tuple    # ((combined variable index, TorusPoint), ...)
    negated: bool


def normalize(ast: Formula, signature: Signature) -> Normalized:
    """Combine coefficients, drop unused bound variables, dedup atoms.

    Bound variables referenced only by f-constraints are kept: dropping
    them would change which witnesses the formula talks about.
    """
    negated = isinstance(ast, NegPpFormula)
    star = isinstance(ast, PpStarFormula)
    core = ast.inner if negated else (ast.core if star else ast)
    fcons = ast.f_constraints if star else ()
    params = signature.parameters

    combined = []  # (pred, [(coeff map, const), ...])
    used_bound = set(fc.var for fc in fcons if fc.var in core.bound_names)
    for atom in core.atoms:
        rows = []
        for t in atom.terms:
            acc = {}
            for v, c in t.summands:
                acc[v] = acc.get(v, 0) + c
            rows.append((acc, t.const))
            used_bound.update(v for v, c in acc.items() if c != 0 and v in core.bound_names)
        combined.append((atom.pred, rows))

    free = core.free_names
    bound = tuple(b for b in core.bound_names if b in used_bound)
    columns = list(free) + list(bound) + list(params)
    col = {name: i for i, name in enumerate(columns)}
    width = len(columns) + 1

    natoms = []
    rebuilt = []
    seen = set()
    for pred, rows in combined:
        entries = []
        terms = []
        for acc, const in rows:
            row = [0] * width
            for v, c in acc.items():
                if c != 0 and v in col:
                    row[col[v]] = c
            row[-1] = const
            entries.append(tuple(row))
            terms.append(Term(tuple((columns[j], row[j]) for j in range(width - 1) if row[j] != 0), const))
        key = (pred, tuple(entries))
        if key in seen:
            continue
        seen.add(key)
        natoms.append(NormalizedAtom(pred, IntMatrix(len(rows), width, tuple(entries))))
        rebuilt.append(Atom(pred, tuple(terms)))

    core2 = PpFormula(free, bound, tuple(rebuilt))
    def idx(v):
        if v in free:
            return free.index(v)
        return len(free) + bound.index(v)
    ordered = tuple(sorted(fcons, key=lambda fc: idx(fc.var)))
    if negated:
        formula: Formula = NegPpFormula(core2)
    elif star:
        formula = PpStarFormula(core2, ordered)
    else:
        formula = core2
    return Normalized(
        formula=formula,
        free_arity=len(free),
        bound_arity=len(bound),
        param_names=params,
        atoms=tuple(natoms),
        f_constraints=tuple((idx(fc.var), fc.value) for fc in ordered),
        negated=negated,
    )
