"""Closed subgroups and cosets of the rational torus T^m.

A closed subgroup is stored only through its Pontryagin dual: the
annihilator lattice {chi in Z^m : chi . x in Z for all x in the group}.
Two subgroups are equal iff their annihilators are equal, which the
canonical HNF basis of `Lattice` makes a structural comparison.  The
intersection of two subgroups corresponds to the sum of annihilators on
the dual side.

All points have rational coordinates canonicalized into [0, 1); the
arithmetic is exact (`fractions.Fraction`), floating point never enters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, gcd, lcm
from typing import Iterable, List, Optional, Sequence, Tuple

from .lattice import INFINITE, IndexValue, IntMatrix, Lattice, lattice_sum, snf, solve


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def format_rational(x: Fraction) -> str:
    """Canonical file serialization p/q with q > 0, gcd(p, q) = 1."""
    x = _frac(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str, strict: bool = False) -> Fraction:
    """Parse "p/q" (or a bare integer when strict is False).

    Strict mode enforces the canonical file form: q > 0, gcd(p, q) = 1,
    0 <= p < q.
    """
    s = text.strip()
    if "/" in s:
        num_s, _, den_s = s.partition("/")
        try:
            num, den = int(num_s), int(den_s)
        except ValueError:
            raise ValueError(f"bad rational literal {text!r}")
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        value = Fraction(num, den)
        if strict and (den <= 0 or gcd(num, den) != 1 or not 0 <= num < den):
            raise ValueError(f"rational {text!r} is not in canonical form p/q with 0 <= p < q")
        return value
    if strict:
        raise ValueError(f"rational {text!r} is not in canonical form p/q")
    try:
        return Fraction(int(s))
    except ValueError:
        raise ValueError(f"bad rational literal {text!r}")


@dataclass(frozen=True)
class TorusPoint:
    """Point of T^m with coordinates reduced into [0, 1)."""

    coords: Tuple[Fraction, ...]

    @classmethod
    def make(cls, coords: Iterable) -> "TorusPoint":
        return cls(tuple(_frac(c) % 1 for c in coords))

    @classmethod
    def zero(cls, dim: int) -> "TorusPoint":
        return cls(tuple(Fraction(0) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def add(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint.make(a + b for a, b in zip(self.coords, other.coords))

    def sub(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint.make(a - b for a, b in zip(self.coords, other.coords))

    def scale(self, k: int) -> "TorusPoint":
        return TorusPoint.make(k * c for c in self.coords)

    def circle_distance(self, other: "TorusPoint") -> Fraction:
        """Max over coordinates of the distance to the nearest integer."""
        best = Fraction(0)
        for a, b in zip(self.coords, other.coords):
            d = (a - b) % 1
            d = min(d, 1 - d)
            if d > best:
                best = d
        return best


@dataclass(frozen=True)
class ClosedTorusSubgroup:
    """Closed subgroup of T^dim, stored as its annihilator lattice."""

    dim: int
    annihilator: Lattice

    @classmethod
    def full(cls, dim: int) -> "ClosedTorusSubgroup":
        return cls(dim, Lattice.zero(dim))

    @classmethod
    def trivial(cls, dim: int) -> "ClosedTorusSubgroup":
        return cls(dim, Lattice.full(dim))

    def contains(self, x: TorusPoint) -> bool:
        if x.dim != self.dim:
            raise ValueError("dimension mismatch")
        for row in self.annihilator.rows():
            if sum(c * v for c, v in zip(row, x.coords)) % 1 != 0:
                return False
        return True

    def order(self) -> IndexValue:
        """Cardinality: finite iff the annihilator has full rank."""
        if self.annihilator.rank < self.dim:
            return INFINITE
        idx = 1
        for i, row in enumerate(self.annihilator.rows()):
            idx *= row[next(j for j, x in enumerate(row) if x != 0)]
        return idx

    def elements(self) -> List[TorusPoint]:
        """All points of a finite subgroup (requires full-rank annihilator)."""
        if self.annihilator.rank < self.dim:
            raise ValueError("subgroup is infinite")
        if self.dim == 0:
            return [TorusPoint.make(())]
        u, d, v = snf(self.annihilator.basis)
        diag = [d.entries[i][i] for i in range(self.dim)]
        out = []
        for combo in itertools.product(*[range(di) for di in diag]):
            y = [Fraction(c, di) for c, di in zip(combo, diag)]
            x = [sum(v.entries[i][j] * y[j] for j in range(self.dim)) for i in range(self.dim)]
            out.append(TorusPoint.make(x))
        return out


@dataclass(frozen=True)
class TorusCoset:
    """Coset of a closed subgroup of T^dim, or the empty set.

    Build instances through `make` / `empty`: `make` replaces the
    representative by a canonical one, so equal cosets compare equal
    structurally.
    """

    dim: int
    rep: Optional[TorusPoint]
    group: Optional[ClosedTorusSubgroup]

    @classmethod
    def empty(cls, dim: int) -> "TorusCoset":
        return cls(dim, None, None)

    @classmethod
    def make(cls, rep: TorusPoint, group: ClosedTorusSubgroup) -> "TorusCoset":
        if rep.dim != group.dim:
            raise ValueError("dimension mismatch")
        return cls(group.dim, _canonical_rep(rep, group), group)

    @classmethod
    def point(cls, rep: TorusPoint) -> "TorusCoset":
        return cls.make(rep, ClosedTorusSubgroup.trivial(rep.dim))

    @property
    def is_empty(self) -> bool:
        return self.rep is None


def _canonical_rep(rep: TorusPoint, group: ClosedTorusSubgroup) -> TorusPoint:
    """Deterministic representative: the unique solution of ann . x = frac(ann . rep)
    with all non-pivot coordinates zero, reduced into [0, 1)."""
    ann = group.annihilator
    if ann.rank == 0:
        return TorusPoint.zero(group.dim)
    w = [sum(c * v for c, v in zip(row, rep.coords)) % 1 for row in ann.rows()]
    x = [Fraction(0)] * group.dim
    pivots = []
    for row in ann.rows():
        pivots.append(next(j for j, e in enumerate(row) if e != 0))
    for i in range(ann.rank - 1, -1, -1):
        row = ann.rows()[i]
        p = pivots[i]
        acc = sum(row[j] * x[j] for j in range(p + 1, group.dim))
        x[p] = (w[i] - acc) / row[p]
    return TorusPoint.make(x)


def closure_of(points: Sequence[TorusPoint], dim: int) -> ClosedTorusSubgroup:
    """Smallest closed subgroup of T^dim containing the given points.

    Dual computation: the annihilator is the lattice of integer vectors
    chi with chi . g integral for every generator g.
    """
    pts = list(points)
    for p in pts:
        if p.dim != dim:
            raise ValueError("dimension mismatch")
    if not pts or dim == 0:
        return ClosedTorusSubgroup(dim, Lattice.full(dim))
    rows = []
    moduli = []
    for p in pts:
        q = lcm(*[c.denominator for c in p.coords]) if p.coords else 1
        rows.append([int(c * q) for c in p.coords])
        moduli.append(q)
    m = IntMatrix.from_rows(rows, dim)
    target = Lattice.diagonal(moduli)
    res = solve(m, target, (0,) * len(pts))
    assert res is not None  # the homogeneous system always has 0
    _, ann = res
    return ClosedTorusSubgroup(dim, ann)


def member(x: TorusPoint, c: TorusCoset) -> bool:
    """Exact membership of a point in a closed coset."""
    if c.is_empty:
        return False
    if x.dim != c.dim:
        raise ValueError("dimension mismatch")
    return c.group.contains(x.sub(c.rep))


def coset_intersect(c1: TorusCoset, c2: TorusCoset) -> TorusCoset:
    """Intersection of two closed cosets; annihilators add on the dual side."""
    if c1.dim != c2.dim:
        raise ValueError("dimension mismatch")
    dim = c1.dim
    if c1.is_empty or c2.is_empty:
        return TorusCoset.empty(dim)
    ann1, ann2 = c1.group.annihilator, c2.group.annihilator
    rows = list(ann1.rows()) + list(ann2.rows())
    k = len(rows)
    group = ClosedTorusSubgroup(dim, lattice_sum(ann1, ann2))
    if k == 0:
        return TorusCoset.make(c1.rep, group)
    w = [sum(r * v for r, v in zip(row, c1.rep.coords)) for row in ann1.rows()] + \
        [sum(r * v for r, v in zip(row, c2.rep.coords)) for row in ann2.rows()]
    lam = IntMatrix.from_rows(rows, dim)
    u, d, v = snf(lam)
    wprime = [sum(u.entries[i][j] * w[j] for j in range(k)) for i in range(k)]
    nmin = min(k, dim)
    xprime = [Fraction(0)] * dim
    for i in range(k):
        di = d.entries[i][i] if i < nmin else 0
        if di == 0:
            if wprime[i] % 1 != 0:
                return TorusCoset.empty(dim)
        else:
            xprime[i] = wprime[i] / di
    x = [sum(v.entries[i][j] * xprime[j] for j in range(dim)) for i in range(dim)]
    return TorusCoset.make(TorusPoint.make(x), group)


# ---------------------------------------------------------------------------
# approximate membership


def _feasible_box(lam_rows: Sequence[Sequence[int]], b: Sequence[Fraction],
                  eps: Fraction, dim: int) -> bool:
    """Is there a real vector e with lam . e = b and |e_i| <= eps?

    The equality system is solved parametrically over the non-pivot
    coordinates, then the box constraints are decided exactly by
    Fourier-Motzkin elimination.
    """
    k = len(lam_rows)
    pivots = [next(j for j, x in enumerate(row) if x != 0) for row in lam_rows]
    free = [j for j in range(dim) if j not in pivots]
    nfree = len(free)
    # affine form per coordinate: (constant, coefficients over free params)
    forms: List[Optional[Tuple[Fraction, List[Fraction]]]] = [None] * dim
    for idx, j in enumerate(free):
        coeffs = [Fraction(0)] * nfree
        coeffs[idx] = Fraction(1)
        forms[j] = (Fraction(0), coeffs)
    for i in range(k - 1, -1, -1):
        row = lam_rows[i]
        p = pivots[i]
        const = _frac(b[i])
        coeffs = [Fraction(0)] * nfree
        for j in range(p + 1, dim):
            cj = row[j]
            if cj == 0:
                continue
            fc, fcoef = forms[j]
            const -= cj * fc
            for t in range(nfree):
                coeffs[t] -= cj * fcoef[t]
        piv = row[p]
        forms[p] = (const / piv, [c / piv for c in coeffs])
    # |form| <= eps, written as two inequalities  sum coef*t <= bound
    ineqs = []
    for j in range(dim):
        fc, fcoef = forms[j]
        ineqs.append(([c for c in fcoef], eps - fc))
        ineqs.append(([-c for c in fcoef], eps + fc))
    # Fourier-Motzkin elimination over the free parameters
    for var in range(nfree):
        lower, upper, rest = [], [], []
        for coefs, bound in ineqs:
            c = coefs[var]
            if c > 0:
                upper.append((coefs, bound))
            elif c < 0:
                lower.append((coefs, bound))
            else:
                rest.append((coefs, bound))
        new = rest
        for lc, lb in lower:
            for uc, ub in upper:
                scale_l = -lc[var]
                scale_u = uc[var]
                coefs = [u * scale_l + l * scale_u for l, u in zip(lc, uc)]
                new.append((coefs, ub * scale_l + lb * scale_u))
        ineqs = new
    return all(bound >= 0 for _, bound in ineqs)


def approx_member(x: TorusPoint, c: TorusCoset, eps: Fraction) -> bool:
    """Distance from x to the coset at most eps, in the max-circle metric.

    With eps = 0 this coincides with exact membership.
    """
    eps = _frac(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if c.is_empty:
        return False
    if x.dim != c.dim:
        raise ValueError("dimension mismatch")
    if eps == 0:
        return member(x, c)
    if 2 * eps >= 1:
        return True
    ann = c.group.annihilator
    if ann.rank == 0:
        return True
    rows = ann.rows()
    wprime = [sum(r * v for r, v in zip(row, c.rep.sub(x).coords)) for row in rows]
    ranges = []
    for row, w in zip(rows, wprime):
        margin = sum(abs(e) for e in row) * eps
        lo = ceil(-w - margin)
        hi = floor(-w + margin)
        if lo > hi:
            return False
        ranges.append(range(lo, hi + 1))
    for z in itertools.product(*ranges):
        b = [w + zi for w, zi in zip(wprime, z)]
        if _feasible_box(rows, b, eps, c.dim):
            return True
    return False
