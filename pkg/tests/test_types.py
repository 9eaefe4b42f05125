"""Type fingerprints, extension search, and the automorphism oracle.

Frozen expectations were derived by hand or by independent enumeration
(witness search over all tuples, explicit automorphism checks) before
being asserted here.  Property sections cross-validate the fingerprint
machinery against the brute-force oracle on random small structures.
"""

import random
from fractions import Fraction

import pytest

from ppstar.errors import (
    BasisIncompleteError,
    SizeLimitError,
    TypeMismatchError,
)
from ppstar.formula import render
from ppstar.lattice import Lattice
from ppstar.randgen import random_finite_structure, random_tuple
from ppstar.solver import Structure, eval_pp
from ppstar.types_bf import (
    Caps,
    automorphisms,
    basis_generate,
    check_theorem,
    eq_ppstar_type,
    extend,
    fingerprint,
    fixpoint_caps,
    negpp_contains,
    orbit_oracle,
    ppstar_contains,
)


def z4_plain() -> Structure:
    return Structure("z4eq", 1, Lattice.from_rows(1, [[4]]), {}, 0, [], {})


def z4_quarter() -> Structure:
    return Structure("z4f", 1, Lattice.from_rows(1, [[4]]), {}, 1,
                     [[Fraction(1, 4)]], {})


def z_third() -> Structure:
    return Structure("z3rd", 1, Lattice.zero(1), {}, 1, [[Fraction(1, 3)]], {})


# ---------------------------------------------------------------------------
# caps


def test_caps_from_text():
    assert Caps.from_text("2,3,4") == Caps(2, 3, 4)
    assert Caps.from_text(" 1 , 2 , 3 ") == Caps(1, 2, 3)


def test_caps_from_text_rejects():
    with pytest.raises(ValueError):
        Caps.from_text("2,3")
    with pytest.raises(ValueError):
        Caps.from_text("2,x,4")


def test_caps_validation():
    with pytest.raises(ValueError):
        Caps(-1, 2, 2)
    with pytest.raises(ValueError):
        Caps(1, 0, 2)
    assert Caps(0, 1, 1).as_dict() == {"k_max": 0, "max_atoms": 1, "max_coeff": 1}


# ---------------------------------------------------------------------------
# basis generation, frozen


def test_basis_z4_subgroups():
    # reachable solution subgroups of Z/4 with one bound variable are
    # exactly 0, 2A, A (derived by enumerating x=0, x=2y, x=x)
    b = basis_generate(z4_plain(), 1, Caps(1, 3, 2))
    groups = sorted({eval_pp(z4_plain(), phi).group.key() for phi in b.formulas})
    assert groups == [(1, ((1,),)), (1, ((2,),)), (1, ((4,),))]


def test_basis_quantifier_free_at_k0():
    b = basis_generate(z4_plain(), 1, Caps(0, 3, 2))
    assert [render(f) for f in b.formulas] == ["Eq(2*x0)", "Eq(x0)"]
    assert all(not f.bound_names for f in b.formulas)


def test_basis_deterministic():
    import ppstar.types_bf as tb
    caps = Caps(2, 3, 2)
    first = [render(f) for f in basis_generate(z4_quarter(), 1, caps).formulas]
    tb._BASIS_MEMO.clear()
    tb._CLOSURE_MEMO.clear()
    second = [render(f) for f in basis_generate(z4_quarter(), 1, caps).formulas]
    assert first == second


def test_basis_deduplicated_and_sorted():
    b = basis_generate(z4_plain(), 2, Caps(1, 3, 2))
    renders = [render(f) for f in b.formulas]
    assert renders == sorted(renders)
    assert len(renders) == len(set(renders))


def test_basis_infinite_structure():
    b = basis_generate(z_third(), 1, Caps(1, 3, 2))
    groups = sorted({eval_pp(z_third(), phi).group.key() for phi in b.formulas})
    assert groups == [(1, ()), (1, ((1,),)), (1, ((2,),))]


def test_basis_size_limit():
    big = Structure("big", 1, Lattice.from_rows(1, [[65536]]), {}, 0, [], {})
    with pytest.raises(SizeLimitError):
        basis_generate(big, 1, Caps(1, 2, 2))


# ---------------------------------------------------------------------------
# fingerprints, frozen


def test_fingerprint_f_values_distinguish():
    s = z4_quarter()
    b = basis_generate(s, 1, Caps(2, 3, 4))
    fa = fingerprint(s, (1,), b)
    fb = fingerprint(s, (3,), b)
    assert fa.f_values.coords == (Fraction(1, 4),)
    assert fb.f_values.coords == (Fraction(3, 4),)
    assert not eq_ppstar_type(s, (1,), (3,), b)


def test_fingerprint_trivial_character_identifies():
    # x -> 3x is an automorphism once no character pins elements down
    s = z4_plain()
    b = basis_generate(s, 1, Caps(2, 3, 4))
    assert eq_ppstar_type(s, (1,), (3,), b)


def test_fingerprint_divisibility_distinguishes():
    s = z4_plain()
    b = basis_generate(s, 1, Caps(2, 3, 4))
    assert not eq_ppstar_type(s, (1,), (2,), b)


def test_fingerprint_bottom_iff_empty():
    from ppstar.formula import normalize
    from ppstar.solver import CompiledPp

    s = z4_quarter()
    b = basis_generate(s, 1, Caps(2, 3, 4))
    fp = fingerprint(s, (1,), b)
    for phi, entry in zip(b.formulas, fp.entries):
        empty = CompiledPp(s, normalize(phi, s.signature())).at((1,)).is_empty
        assert (entry is None) == empty


def test_fingerprint_self_equal():
    s = z4_quarter()
    b = basis_generate(s, 1, Caps(2, 3, 4))
    assert eq_ppstar_type(s, (2,), (2,), b)


def test_fingerprint_infinite_structure():
    s = z_third()
    b = basis_generate(s, 1, Caps(1, 3, 2))
    assert fingerprint(s, (1,), b).f_values.coords == (Fraction(1, 3),)
    assert not eq_ppstar_type(s, (1,), (4,), b)   # parity under x=2y
    assert eq_ppstar_type(s, (1,), (7,), b)


def test_fingerprint_arity_mismatch():
    from ppstar.errors import DimensionError

    s = z4_plain()
    b = basis_generate(s, 1, Caps(1, 2, 2))
    with pytest.raises(DimensionError):
        fingerprint(s, (1, 2), b)


# ---------------------------------------------------------------------------
# extension, frozen


def test_extend_identity():
    s = z4_plain()
    b = basis_generate(s, 1, Caps(2, 3, 4))
    d = extend(s, (1,), (1,), (2,), b)
    assert eq_ppstar_type(s, (1, 2), (1,) + d, basis_generate(s, 2, b.caps))


def test_extend_z4():
    # 2 = 2*1 = 2*3 in Z/4, so d = 2 is forced
    s = z4_plain()
    b = basis_generate(s, 1, Caps(2, 3, 4))
    assert extend(s, (1,), (3,), (2,), b) == (2,)


def test_extend_type_mismatch():
    s = z4_plain()
    b = basis_generate(s, 1, Caps(2, 3, 4))
    with pytest.raises(TypeMismatchError):
        extend(s, (1,), (2,), (0,), b)


def test_extend_incomplete_basis_is_loud():
    # caps so small the basis cannot see divisibility: (1) and (2) look
    # alike at arity 1 but no d matches (1,1) against (2,d) at arity 2
    s = z4_plain()
    b = basis_generate(s, 1, Caps(0, 1, 1))
    assert [render(f) for f in b.formulas] == ["Eq(x0)"]
    assert eq_ppstar_type(s, (1,), (2,), b)
    with pytest.raises(BasisIncompleteError):
        extend(s, (1,), (2,), (1,), b)


# ---------------------------------------------------------------------------
# automorphism oracle, frozen


def test_automorphism_counts():
    assert len(automorphisms(z4_plain())) == 2      # x -> x, x -> 3x
    assert len(automorphisms(z4_quarter())) == 1    # character pins x -> 3x


def test_orbit_oracle_examples():
    assert orbit_oracle(z4_plain(), (1,), (3,))
    assert orbit_oracle(z4_plain(), (2,), (2,))
    assert not orbit_oracle(z4_quarter(), (1,), (3,))


def test_orbit_oracle_size_limit(monkeypatch):
    big = Structure("z128", 1, Lattice.from_rows(1, [[128]]), {}, 0, [], {})
    with pytest.raises(SizeLimitError):
        orbit_oracle(big, (1,), (3,))
    monkeypatch.setenv("PPSTAR_MAX_ORBIT", "128")
    assert orbit_oracle(big, (1,), (3,))


def test_orbit_respects_distinguished_subgroup():
    # marking 2A of Z/8 still allows x -> 3x; marking {0,4} likewise, but
    # a unary subgroup through 2 forbids mapping 2 off itself setwise
    sub = Lattice.from_rows(1, [[2], [8]])
    s = Structure("z8p", 1, Lattice.from_rows(1, [[8]]),
                  {"P": (1, sub)}, 0, [], {})
    assert orbit_oracle(s, (2,), (6,))      # 3*2 = 6, both in P
    assert not orbit_oracle(s, (2,), (1,))  # 1 is not in P


# ---------------------------------------------------------------------------
# theorem harness, frozen


def test_check_theorem_z4():
    rep = check_theorem(z4_quarter(), 1, Caps(2, 3, 4), trials=20, seed=5)
    assert rep["verdict"] == "PASS"
    assert rep["mismatches"] == []
    assert rep["structure"] == "z4f"
    assert rep["arity"] == 1
    assert rep["caps"] == {"k_max": 2, "max_atoms": 3, "max_coeff": 4}
    assert rep["pairs_checked"] == 26


def test_check_theorem_trivial_group():
    triv = Structure("triv", 1, Lattice.from_rows(1, [[1]]), {}, 0, [], {})
    rep = check_theorem(triv, 1, Caps(1, 2, 2), trials=5, seed=1)
    assert rep["verdict"] == "PASS"
    assert rep["mismatches"] == []


def test_check_theorem_reports_incompleteness():
    # the k=0 coeff=1 basis cannot separate 1 from 2 in Z/4
    rep = check_theorem(z4_plain(), 1, Caps(0, 1, 1), trials=10, seed=2)
    assert rep["verdict"] == "BASIS_INCOMPLETE"
    assert rep["suggested_caps"]["k_max"] > 0
    assert any(m["fingerprint_equal"] and not m["orbit_equal"]
               for m in rep["mismatches"])


def test_fixpoint_caps_small_seeds():
    s0 = random_finite_structure(random.Random(0), max_order=32)
    assert fixpoint_caps(s0, 1) == Caps(2, 3, 2)
    s1 = random_finite_structure(random.Random(1), max_order=32)
    assert fixpoint_caps(s1, 1) == Caps(1, 3, 1)


# ---------------------------------------------------------------------------
# properties


def test_automorphisms_preserve_fingerprint():
    for seed in range(6):
        rng = random.Random(seed)
        s = random_finite_structure(rng, max_order=16)
        b = basis_generate(s, 1, Caps(2, 3, 3))
        autos = automorphisms(s)
        for a in s.elements():
            fa = fingerprint(s, a, b)
            for mat in autos[:6]:
                img = s.reduce(tuple(sum(mat[i][j] * a[j] for j in range(len(a)))
                                     for i in range(len(a))))
                assert fingerprint(s, img, b) == fa


def test_containments_imply_equality():
    hits = 0
    for seed in range(8):
        rng = random.Random(seed + 50)
        s = random_finite_structure(rng, max_order=16)
        b = basis_generate(s, 1, Caps(2, 3, 3))
        elems = s.elements()
        for _ in range(12):
            a, c = rng.choice(elems), rng.choice(elems)
            if ppstar_contains(s, a, c, b) and negpp_contains(s, a, c, b):
                hits += 1
                assert eq_ppstar_type(s, a, c, b)
    assert hits > 10   # the property must actually fire


def test_extend_post_verified():
    for seed in range(4):
        rng = random.Random(seed + 90)
        s = random_finite_structure(rng, max_order=12)
        caps = fixpoint_caps(s, 1)
        b = basis_generate(s, 1, caps)
        b2 = basis_generate(s, 2, caps)
        elems = s.elements()
        a = rng.choice(elems)
        partners = [x for x in elems if eq_ppstar_type(s, a, x, b)]
        for x in partners[:3]:
            for c in elems[:4]:
                d = extend(s, a, x, c, b)
                assert eq_ppstar_type(s, tuple(a) + tuple(c), tuple(x) + d, b2)


def test_key_and_fingerprint_agree():
    # the packed integer keys used for bulk comparison and the public
    # fingerprint objects must induce the same partition
    from ppstar.types_bf import _basis_keys

    pairs = bad = 0
    for seed in range(6):
        rng = random.Random(seed)
        s = random_finite_structure(rng, max_order=12)
        for m in (1, 2):
            b = basis_generate(s, m, Caps(2, 3, 3))
            elems = s.elements()
            tuples = [tuple(x for _ in range(m) for x in rng.choice(elems))
                      for _ in range(8)]
            keys = _basis_keys(s, b, tuples)
            fps = [fingerprint(s, t, b) for t in tuples]
            for i in range(len(tuples)):
                for j in range(i + 1, len(tuples)):
                    pairs += 1
                    if (keys[i] == keys[j]) != (fps[i] == fps[j]):
                        bad += 1
    assert bad == 0 and pairs > 200


def test_check_theorem_random_structures():
    for seed in (0, 1, 2):
        s = random_finite_structure(random.Random(seed), max_order=16)
        caps = fixpoint_caps(s, 1)
        rep = check_theorem(s, 1, caps, trials=30, seed=seed)
        assert rep["verdict"] == "PASS", rep["mismatches"]
