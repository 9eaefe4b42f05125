import random
from fractions import Fraction

import pytest

from ppstar.errors import ParseError
from ppstar.formula import (
    Atom,
    FConstraint,
    NegPpFormula,
    PpFormula,
    PpStarFormula,
    Signature,
    Term,
    normalize,
    parse,
    render,
)
from ppstar.lattice import IntMatrix
from ppstar.torus import TorusPoint

SIG = Signature({"P": 1, "Q": 2}, parameters=("a", "one"), torus_dim=1)
SIG2 = Signature({"P": 1}, parameters=("a",), torus_dim=2)
BARE = Signature({"P": 1})  # no parameters, torus_dim 0


def test_parse_basic_pp():
    ast = parse("E y. Eq(x - 2*y)", SIG)
    assert isinstance(ast, PpFormula)
    assert ast.free_names == ("x",)
    assert ast.bound_names == ("y",)
    assert ast.atoms == (Atom("Eq", (Term((("x", 1), ("y", -2)), 0),)),)


def test_render_canonical():
    ast = parse("E y. Eq(x - 2*y)", SIG)
    assert render(ast) == "E y. Eq(x + -2*y)"


def test_desugared_equality():
    ast = parse("x - 2*y = a", SIG)
    assert render(ast) == "Eq(x + -2*y + -a)"
    assert isinstance(ast, PpFormula)
    assert ast.free_names == ("x", "y")


def test_zero_term_renders_zero():
    ast = parse("0 = 0", SIG)
    assert render(ast) == "Eq(0)"


def test_constants_require_one():
    ast = parse("Eq(x + 3)", SIG)
    assert render(ast) == "Eq(x + 3)"
    with pytest.raises(ParseError):
        parse("Eq(x + 3)", BARE)
    parse("Eq(x + 0)", BARE)  # zero constant always fine


def test_negation_wrapper():
    ast = parse("! E y. Eq(x - 2*y)", SIG)
    assert isinstance(ast, NegPpFormula)
    assert render(ast) == "! E y. Eq(x + -2*y)"


def test_f_constraint_under_negation_rejected():
    with pytest.raises(ParseError) as exc:
        parse("! E y. Eq(x - 2*y) & f(y) = 1/4", SIG)
    assert "negation" in exc.value.message


def test_ppstar_parse_and_sorted_render():
    ast = parse("E y. Eq(x - y) & f(y) = 1/4 & f(x) = 0/1", SIG)
    assert isinstance(ast, PpStarFormula)
    assert render(ast) == "E y. Eq(x + -y) & f(x) = 0/1 & f(y) = 1/4"
    assert ast.f_constraints == (
        FConstraint("x", TorusPoint.make([Fraction(0)])),
        FConstraint("y", TorusPoint.make([Fraction(1, 4)])),
    )


def test_pure_f_constraint_formula():
    ast = parse("f(x) = 1/4", SIG)
    assert isinstance(ast, PpStarFormula)
    assert ast.core.free_names == ("x",)
    assert ast.core.atoms == ()


def test_varlist_comma_form():
    ast = parse("E y, z. P(x + y + z)", SIG)
    assert ast.bound_names == ("y", "z")
    assert render(ast) == "E y. E z. P(x + y + z)"


def test_tpoint_dimension():
    ast = parse("f(x) = (1/2, 1/3)", SIG2)
    fc = ast.f_constraints[0]
    assert fc.value == TorusPoint.make([Fraction(1, 2), Fraction(1, 3)])
    with pytest.raises(ParseError):
        parse("f(x) = 1/2", SIG2)


def test_rejections():
    cases = [
        ("R(x)", SIG),            # unknown predicate
        ("P(x, y)", SIG),         # arity mismatch
        ("Q(x)", SIG),            # arity mismatch the other way
        ("f(x) = 1/0", SIG),      # malformed rational
        ("f(a) = 1/4", SIG),      # f of a parameter
        ("E y. E y. P(y)", SIG),  # duplicate binder
        ("f(x) = 1/4 & f(x) = 1/2", SIG),  # duplicate constraint
        ("P(x) &", SIG),          # dangling conjunction
        ("P(x) P(y)", SIG),       # missing '&'
        ("E a. P(a)", SIG),       # binder shadows parameter
        ("P(2*)", SIG),           # missing name after '*'
    ]
    for text, sig in cases:
        with pytest.raises(ParseError):
            parse(text, sig)


def test_parse_error_positions():
    with pytest.raises(ParseError) as exc:
        parse("P(x) & R(y)", SIG)
    assert exc.value.position == 7


# ---------------------------------------------------------------------------
# randomized round-trip corpus


def _random_term(rng, names, allow_const):
    bits = []
    for _ in range(rng.randrange(1, 4)):
        v = rng.choice(names)
        c = rng.randrange(-4, 5)
        style = rng.randrange(3)
        if style == 0 and c >= 0:
            bits.append(f"{c}*{v}")
        elif style == 1:
            bits.append(f"{c}*{v}" if c < 0 else f"{c}*{v}")
        else:
            bits.append(v if rng.random() < 0.5 else f"-{v}")
    if rng.random() < 0.3:
        bits.append(str(rng.randrange(0, 5)) if allow_const else "0")
    out = bits[0]
    for b in bits[1:]:
        out += rng.choice([" + ", " - "]) + b
    return out


def _random_formula(rng, sig):
    bound = rng.sample(["y", "z", "w"], rng.randrange(0, 3))
    free_pool = ["x", "u", "v"]
    names = free_pool + bound + [p for p in sig.parameters]
    prefix = "".join(f"E {b}. " for b in bound)
    allow_const = "one" in sig.parameters
    negated = rng.random() < 0.2
    atoms = []
    for _ in range(rng.randrange(1, 4)):
        kind = rng.randrange(3)
        if kind == 0:
            atoms.append(f"Eq({_random_term(rng, names, allow_const)})")
        elif kind == 1:
            preds = [(p, r) for p, r in sig.predicates.items() if p != "Eq"]
            p, r = rng.choice(preds)
            atoms.append(f"{p}({', '.join(_random_term(rng, names, allow_const) for _ in range(r))})")
        else:
            atoms.append(f"{_random_term(rng, names, allow_const)} = {_random_term(rng, names, allow_const)}")
    if not negated and sig.torus_dim and rng.random() < 0.5:
        used = []
        for _ in range(rng.randrange(1, 3)):
            v = rng.choice([n for n in free_pool + bound if n not in used])
            used.append(v)
            coords = ",".join(f"{rng.randrange(0, 9)}/{rng.randrange(1, 7)}" for _ in range(sig.torus_dim))
            point = coords if sig.torus_dim == 1 else f"({coords})"
            atoms.append(f"f({v}) = {point}")
        rng.shuffle(atoms)
    text = ("! " if negated else "") + prefix + " & ".join(atoms)
    return text


def test_round_trip_corpus():
    rng = random.Random(42)
    count = 0
    for sig in (SIG, SIG2):
        for _ in range(300):
            text = _random_formula(rng, sig)
            a1 = parse(text, sig)
            a2 = parse(render(a1), sig)
            assert a2 == a1, text
            count += 1
    assert count >= 500


def test_normalize_idempotent_on_corpus():
    rng = random.Random(43)
    for _ in range(200):
        text = _random_formula(rng, SIG)
        n1 = normalize(parse(text, SIG), SIG)
        n2 = normalize(n1.formula, SIG)
        assert n2 == n1, text


# ---------------------------------------------------------------------------
# normalization


def test_normalize_merges_bound_blocks():
    sig = Signature({"P": 1})
    n = normalize(parse("E y. E z. P(x+y+z)", sig), sig)
    assert n.free_arity == 1
    assert n.bound_arity == 2
    assert len(n.atoms) == 1
    assert n.atoms[0].matrix == IntMatrix.from_rows([[1, 1, 1, 0]])


def test_normalize_removes_duplicate_atoms():
    n = normalize(parse("Eq(x) & Eq(x)", SIG), SIG)
    assert len(n.atoms) == 1
    n2 = normalize(parse("Eq(x + y - y) & Eq(x)", SIG), SIG)
    assert len(n2.atoms) == 1
    assert n2.free_arity == 2  # y stays free even after its coefficient cancels


def test_normalize_drops_unused_bound():
    n = normalize(parse("E y. Eq(x)", SIG), SIG)
    assert n.bound_arity == 0
    assert render(n.formula) == "Eq(x)"
    # a bound variable held only by an f-constraint survives
    n2 = normalize(parse("E y. Eq(x) & f(y) = 1/4", SIG), SIG)
    assert n2.bound_arity == 1
    assert n2.f_constraints == ((1, TorusPoint.make([Fraction(1, 4)])),)


def test_normalize_parameter_columns():
    n = normalize(parse("Eq(x - 2*y - a)", SIG), SIG)
    # columns: x, y | (no bound) | a, one | const
    assert n.atoms[0].matrix == IntMatrix.from_rows([[1, -2, -1, 0, 0]])
    m = normalize(parse("Eq(x + 3)", SIG), SIG)
    assert m.atoms[0].matrix == IntMatrix.from_rows([[1, 0, 0, 3]])
