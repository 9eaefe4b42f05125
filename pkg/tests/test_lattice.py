"""Exact lattice algebra: frozen examples plus algebraic law tests.

Expected values in the frozen tests were derived by hand (row reduction
on paper) or by independent brute force over small boxes; they are
asserted literally so a regression cannot hide behind the library's own
arithmetic.
"""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ppstar.lattice import (
    INFINITE,
    IntMatrix,
    Lattice,
    coset_intersect,
    direct_sum,
    hnf_rows,
    image,
    index_of,
    intersect,
    lattice_sum,
    left_kernel,
    project,
    snf,
    solve,
)


# ---------------------------------------------------------------------------
# frozen examples


def test_hnf_identity_fixed():
    assert hnf_rows([[1, 0], [0, 1]], 2) == [(1, 0), (0, 1)]


def test_hnf_2x2_fixed():
    # by hand: r2 -= 3 r1 gives (0,-4); negate; clear above: r1 -= r2
    assert hnf_rows([[2, 4], [6, 8]], 2) == [(2, 0), (0, 4)]


def test_hnf_zero_row_dropped():
    lat = Lattice.from_rows(2, [[0, 0]])
    assert lat.rank == 0
    assert lat.ambient == 2


def test_snf_2x2_fixed():
    m = IntMatrix.from_rows([[2, 4], [6, 8]])
    u, d, v = snf(m)
    assert [d.entries[i][i] for i in range(2)] == [2, 4]
    assert u.mul(m).mul(v).entries == d.entries
    assert abs(u.det()) == 1
    assert abs(v.det()) == 1


def test_intersect_1d_fixed():
    a = Lattice.from_rows(1, [[2]])
    b = Lattice.from_rows(1, [[3]])
    assert intersect(a, b) == Lattice.from_rows(1, [[6]])


def test_intersect_2d_fixed():
    a = Lattice.from_rows(2, [[1, 1], [0, 2]])
    b = Lattice.from_rows(2, [[1, 0]])
    # brute force over the box [-6,6]^2: common points are multiples of (2,0)
    assert intersect(a, b) == Lattice.from_rows(2, [[2, 0]])


def test_intersect_idempotent():
    a = Lattice.from_rows(2, [[2, 1], [0, 3]])
    assert intersect(a, a) == a


def test_index_fixed():
    z2 = Lattice.full(2)
    two_z2 = Lattice.from_rows(2, [[2, 0], [0, 2]])
    assert index_of(two_z2, z2) == 4
    assert index_of(z2, z2) == 1
    line = Lattice.from_rows(2, [[1, 0]])
    assert index_of(line, z2) is INFINITE


def test_index_requires_containment():
    with pytest.raises(ValueError):
        index_of(Lattice.from_rows(1, [[3]]), Lattice.from_rows(1, [[2]]))


def test_solve_fixed_divisibility():
    # {x : 3x in 2Z} = 2Z
    m = IntMatrix.from_rows([[3]])
    res = solve(m, Lattice.from_rows(1, [[2]]), (0,))
    assert res is not None
    rep, ker = res
    assert ker == Lattice.from_rows(1, [[2]])
    assert ker.member(rep) or rep == (0,)


def test_solve_identity_full():
    m = IntMatrix.identity(3)
    res = solve(m, Lattice.full(3), (0, 0, 0))
    assert res is not None
    _, ker = res
    assert ker == Lattice.full(3)


def test_solve_empty():
    # {x : 2x - 1 in 0} has no integer solution
    m = IntMatrix.from_rows([[2]])
    assert solve(m, Lattice.zero(1), (1,)) is None


def test_membership_and_reduce():
    lat = Lattice.from_rows(2, [[2, 0], [0, 4]])
    assert lat.member((4, 8))
    assert not lat.member((1, 0))
    assert lat.reduce((5, 9)) == (1, 1)
    assert lat.reduce((5, 9)) == lat.reduce((7, 13))


def test_left_kernel_fixed():
    m = IntMatrix.from_rows([[2, 4], [1, 2], [0, 0]])
    k = left_kernel(m)
    # kernel rows annihilate m
    for r in k.rows():
        assert m.transpose().mat_vec(r) == (0, 0)
    assert k.rank == 2


# ---------------------------------------------------------------------------
# randomized law tests


def random_lattice(rng, ambient, max_rows=None, bound=5):
    rows = rng.randrange(0, (max_rows or ambient) + 1)
    return Lattice.from_rows(
        ambient,
        [[rng.randrange(-bound, bound + 1) for _ in range(ambient)] for _ in range(rows)],
    )


def box_points(ambient, radius):
    if ambient == 0:
        return [()]
    rest = box_points(ambient - 1, radius)
    return [(x,) + t for x in range(-radius, radius + 1) for t in rest]


def test_hnf_canonical_under_unimodular_shuffle():
    rng = random.Random(7)
    for _ in range(60):
        n = rng.randrange(1, 4)
        lat = random_lattice(rng, n)
        rows = [list(r) for r in lat.rows()]
        # random elementary row operations preserve the row span
        for _ in range(10):
            if len(rows) < 2:
                break
            i, j = rng.sample(range(len(rows)), 2)
            op = rng.randrange(3)
            if op == 0:
                q = rng.randrange(-3, 4)
                rows[i] = [a + q * b for a, b in zip(rows[i], rows[j])]
            elif op == 1:
                rows[i], rows[j] = rows[j], rows[i]
            else:
                rows[i] = [-a for a in rows[i]]
        assert Lattice.from_rows(n, rows) == lat


@settings(max_examples=80, deadline=None)
@given(st.lists(st.lists(st.integers(-9, 9), min_size=3, max_size=3), min_size=0, max_size=4))
def test_hnf_idempotent(rows):
    lat = Lattice.from_rows(3, rows)
    again = Lattice.from_rows(3, list(lat.rows()))
    assert again == lat


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 4), st.data())
def test_snf_certificate_random(n, data):
    rows = data.draw(st.integers(1, 4))
    m = IntMatrix.from_rows(
        [[data.draw(st.integers(-20, 20)) for _ in range(n)] for _ in range(rows)]
    )
    u, d, v = snf(m)
    assert u.mul(m).mul(v).entries == d.entries
    assert abs(u.det()) == 1
    assert abs(v.det()) == 1
    diag = [d.entries[i][i] for i in range(min(rows, n))]
    for i in range(min(rows, n)):
        for j in range(n):
            if i != j and j < n:
                assert d.entries[i][j] == 0
    for a, b in zip(diag, diag[1:]):
        assert a >= 0
        if a != 0:
            assert b % a == 0
        else:
            assert b == 0


def test_intersect_by_box_sampling():
    rng = random.Random(19)
    pts = box_points(3, 4)
    for _ in range(40):
        a = random_lattice(rng, 3, bound=3)
        b = random_lattice(rng, 3, bound=3)
        c = intersect(a, b)
        for p in pts:
            assert c.member(p) == (a.member(p) and b.member(p))


def test_sum_contains_both():
    rng = random.Random(23)
    for _ in range(40):
        a = random_lattice(rng, 3)
        b = random_lattice(rng, 3)
        s = lattice_sum(a, b)
        assert s.contains_lattice(a)
        assert s.contains_lattice(b)


def test_index_multiplicative_on_chains():
    rng = random.Random(11)
    for _ in range(60):
        n = rng.randrange(1, 4)
        base = Lattice.full(n)
        m1 = [[rng.randrange(-3, 4) for _ in range(n)] for _ in range(n)]
        m2 = [[rng.randrange(-3, 4) for _ in range(n)] for _ in range(n)]
        d1 = IntMatrix.from_rows(m1).det()
        d2 = IntMatrix.from_rows(m2).det()
        if d1 == 0 or d2 == 0:
            continue
        mid = Lattice.from_rows(n, m1)
        inner_rows = IntMatrix.from_rows(m2).mul(IntMatrix.from_rows(m1)).entries
        inner = Lattice.from_rows(n, inner_rows)
        # oracle: index equals |det| of the coefficient matrix
        assert index_of(mid, base) == abs(d1)
        assert index_of(inner, mid) == abs(d2)
        assert index_of(inner, base) == abs(d1) * abs(d2)


def test_solve_against_box_enumeration():
    rng = random.Random(31)
    pts = box_points(2, 6)
    for _ in range(50):
        p = rng.randrange(1, 3)
        m = IntMatrix.from_rows([[rng.randrange(-3, 4) for _ in range(2)] for _ in range(p)])
        target = random_lattice(rng, p, bound=3)
        shift = tuple(rng.randrange(-3, 4) for _ in range(p))
        res = solve(m, target, shift)
        for v in pts:
            inside = target.member(tuple(a - b for a, b in zip(m.mat_vec(v), shift)))
            if res is None:
                assert not inside
            else:
                rep, ker = res
                claimed = ker.member(tuple(a - b for a, b in zip(v, rep)))
                assert claimed == inside


def test_coset_intersect_against_box():
    rng = random.Random(37)
    pts = box_points(2, 5)
    for _ in range(50):
        l1 = random_lattice(rng, 2, bound=3)
        l2 = random_lattice(rng, 2, bound=3)
        r1 = tuple(rng.randrange(-3, 4) for _ in range(2))
        r2 = tuple(rng.randrange(-3, 4) for _ in range(2))
        res = coset_intersect(r1, l1, r2, l2)
        for v in pts:
            inside = l1.member(tuple(a - b for a, b in zip(v, r1))) and \
                l2.member(tuple(a - b for a, b in zip(v, r2)))
            if res is None:
                assert not inside
            else:
                rep, ker = res
                assert ker == intersect(l1, l2)
                assert ker.member(tuple(a - b for a, b in zip(v, rep))) == inside


def test_image_and_project():
    lat = Lattice.from_rows(2, [[2, 0], [0, 3]])
    m = IntMatrix.from_rows([[1, 1]])
    img = image(lat, m)
    assert img == Lattice.from_rows(1, [[1]])
    assert project(lat, [0]) == Lattice.from_rows(1, [[2]])
    ds = direct_sum([lat, Lattice.from_rows(1, [[5]])])
    assert ds.ambient == 3
    assert ds.member((2, 3, 5))
    assert not ds.member((1, 0, 0))
