"""Exact integer lattice algebra.

Everything here runs on arbitrary-precision Python ints; there is no
floating point and no modular shortcut.  Lattices are sublattices of
some Z^n, stored as a canonical row-style Hermite normal form so that
two lattices are equal as sets iff their stored bases are identical.

Conventions:
  * vectors are tuples of ints, read as rows of length `ambient`;
  * a basis is a matrix whose rows generate the lattice;
  * linear maps are matrices applied on the left (M applied to v is
    the matrix-vector product with v as a column), so a map from Z^q
    to Z^p is a p x q matrix.

The canonical HNF used throughout: rows ordered by strictly increasing
pivot column, each pivot positive, and every entry above a pivot
reduced into [0, pivot).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union


class _Infinite:
    """Singleton marker for an infinite subgroup index."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"


INFINITE = _Infinite()

IndexValue = Union[int, _Infinite]


# ---------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class IntMatrix:
    """Immutable integer matrix (tuple of row tuples).

    >>> IntMatrix.identity(2).entries
    ((1, 0), (0, 1))
    """

    rows: int
    cols: int
    entries: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_rows(cls, entries: Sequence[Sequence[int]], cols: Optional[int] = None) -> "IntMatrix":
        rows = [tuple(int(x) for x in r) for r in entries]
        if rows:
            width = len(rows[0])
            if any(len(r) != width for r in rows):
                raise ValueError("ragged matrix")
            if cols is not None and cols != width:
                raise ValueError(f"expected {cols} columns, got {width}")
            cols = width
        elif cols is None:
            raise ValueError("empty matrix needs an explicit column count")
        return cls(len(rows), cols, tuple(rows))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, tuple(tuple(0 for _ in range(cols)) for _ in range(rows)))

    def row(self, i: int) -> Tuple[int, ...]:
        return self.entries[i]

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows,
                         tuple(tuple(self.entries[i][j] for i in range(self.rows))
                               for j in range(self.cols)))

    def mul(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        ot = other.transpose().entries
        out = tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in ot) for r in self.entries)
        return IntMatrix(self.rows, other.cols, out)

    def mat_vec(self, v: Sequence[int]) -> Tuple[int, ...]:
        """Apply the matrix to a column vector: result has `rows` entries."""
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        return tuple(sum(a * b for a, b in zip(r, v)) for r in self.entries)

    def vstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.cols:
            raise ValueError("column mismatch")
        return IntMatrix(self.rows + other.rows, self.cols, self.entries + other.entries)

    def hstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.rows != other.rows:
            raise ValueError("row mismatch")
        return IntMatrix(self.rows, self.cols + other.cols,
                         tuple(a + b for a, b in zip(self.entries, other.entries)))

    def neg(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols,
                         tuple(tuple(-x for x in r) for r in self.entries))

    def kron_identity(self, n: int) -> "IntMatrix":
        """Kronecker product self (x) I_n: each scalar entry becomes a diagonal block."""
        out = []
        for r in self.entries:
            for k in range(n):
                row = []
                for x in r:
                    block = [0] * n
                    block[k] = x
                    row.extend(block)
                out.append(tuple(row))
        return IntMatrix(self.rows * n, self.cols * n, tuple(out))

    def det(self) -> int:
        """Exact determinant via fraction-free (Bareiss) elimination."""
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        m = [list(r) for r in self.entries]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                for i in range(k + 1, n):
                    if m[i][k] != 0:
                        m[k], m[i] = m[i], m[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
                m[i][k] = 0
            prev = m[k][k]
        return sign * m[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Hermite normal form


def _hnf_inplace(mat: List[List[int]], cols: int, transform: Optional[List[List[int]]] = None):
    """Row-reduce `mat` to canonical HNF in place.

    Returns the list of (row, col) pivot positions.  When `transform` is
    given it receives the same row operations, so transform * original = hnf
    with zero rows kept at the bottom.
    """
    nrows = len(mat)
    h = 0
    pivots = []
    for col in range(cols):
        # euclidean elimination below row h in this column
        while True:
            nz = [i for i in range(h, nrows) if mat[i][col] != 0]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(mat[i][col]))
            if i0 != h:
                mat[h], mat[i0] = mat[i0], mat[h]
                if transform is not None:
                    transform[h], transform[i0] = transform[i0], transform[h]
            if len(nz) == 1 and mat[h][col] != 0:
                break
            p = mat[h][col]
            for i in range(h + 1, nrows):
                if mat[i][col] != 0:
                    q = mat[i][col] // p
                    if q:
                        mat[i] = [a - q * b for a, b in zip(mat[i], mat[h])]
                        if transform is not None:
                            transform[i] = [a - q * b for a, b in zip(transform[i], transform[h])]
        if h < nrows and mat[h][col] != 0:
            if mat[h][col] < 0:
                mat[h] = [-x for x in mat[h]]
                if transform is not None:
                    transform[h] = [-x for x in transform[h]]
            p = mat[h][col]
            for i in range(h):
                q = mat[i][col] // p  # floor keeps the residue in [0, p)
                if q:
                    mat[i] = [a - q * b for a, b in zip(mat[i], mat[h])]
                    if transform is not None:
                        transform[i] = [a - q * b for a, b in zip(transform[i], transform[h])]
            pivots.append((h, col))
            h += 1
            if h == nrows:
                break
    return pivots


def hnf_rows(rows: Sequence[Sequence[int]], cols: int) -> List[Tuple[int, ...]]:
    """Canonical HNF basis (zero rows dropped) of the row span.

    >>> hnf_rows([[2, 4], [6, 8]], 2)
    [(2, 0), (0, 4)]
    """
    mat = [list(r) for r in rows]
    _hnf_inplace(mat, cols)
    return [tuple(r) for r in mat if any(r)]


def hnf_with_transform(m: IntMatrix) -> Tuple[IntMatrix, IntMatrix]:
    """(H, U) with U unimodular, U * m = H, H canonical HNF with zero rows kept."""
    mat = [list(r) for r in m.entries]
    tr = [[1 if i == j else 0 for j in range(m.rows)] for i in range(m.rows)]
    _hnf_inplace(mat, m.cols, tr)
    h = IntMatrix.from_rows(mat, m.cols) if mat else IntMatrix.zeros(0, m.cols)
    u = IntMatrix.from_rows(tr, m.rows) if tr else IntMatrix.zeros(0, 0)
    return h, u


def left_kernel(m: IntMatrix) -> "Lattice":
    """Lattice of integer row vectors u with u * m = 0."""
    h, u = hnf_with_transform(m)
    rows = [u.entries[i] for i in range(m.rows) if not any(h.entries[i])]
    return Lattice.from_rows(m.rows, rows)


# ---------------------------------------------------------------------------
# Smith normal form


def snf(m: IntMatrix) -> Tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Smith normal form with certificate: returns (U, D, V), U*m*V = D.

    U and V are unimodular; D is diagonal with nonnegative entries and
    d1 | d2 | ... along the diagonal.

    >>> u, d, v = snf(IntMatrix.from_rows([[2, 4], [6, 8]]))
    >>> [d.entries[i][i] for i in range(2)]
    [2, 4]
    """
    r, c = m.rows, m.cols
    d = [list(row) for row in m.entries]
    u = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    v = [[1 if i == j else 0 for j in range(c)] for i in range(c)]

    def swap_rows(i, j):
        d[i], d[j] = d[j], d[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in d:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):
        # row_dst -= q * row_src
        d[dst] = [a - q * b for a, b in zip(d[dst], d[src])]
        u[dst] = [a - q * b for a, b in zip(u[dst], u[src])]

    def add_col(dst, src, q):
        for row in d:
            row[dst] -= q * row[src]
        for row in v:
            row[dst] -= q * row[src]

    n = min(r, c)
    for k in range(n):
        while True:
            # locate the smallest nonzero entry in the trailing block
            best = None
            for i in range(k, r):
                for j in range(k, c):
                    if d[i][j] != 0 and (best is None or abs(d[i][j]) < abs(d[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            if best != (k, k):
                if best[0] != k:
                    swap_rows(k, best[0])
                if best[1] != k:
                    swap_cols(k, best[1])
            clean = True
            for i in range(k + 1, r):
                if d[i][k] != 0:
                    q = d[i][k] // d[k][k]
                    add_row(i, k, q)
                    if d[i][k] != 0:
                        clean = False
            for j in range(k + 1, c):
                if d[k][j] != 0:
                    q = d[k][j] // d[k][k]
                    add_col(j, k, q)
                    if d[k][j] != 0:
                        clean = False
            if not clean:
                continue
            # divisibility sweep: pivot must divide the whole trailing block
            pivot = d[k][k]
            bad = None
            for i in range(k + 1, r):
                for j in range(k + 1, c):
                    if d[i][j] % pivot != 0:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(k, bad, -1)  # pull the offending row up and restart
        if k < r and k < c and d[k][k] < 0:
            d[k] = [-x for x in d[k]]
            u[k] = [-x for x in u[k]]

    um = IntMatrix.from_rows(u, r) if r else IntMatrix.zeros(0, 0)
    vm = IntMatrix.from_rows(v, c) if c else IntMatrix.zeros(0, 0)
    dm = IntMatrix.from_rows(d, c) if d else IntMatrix.zeros(0, c)
    return um, dm, vm


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class Lattice:
    """Sublattice of Z^ambient with a canonical HNF basis.

    Equality of Lattice values is set equality because the stored basis
    is canonical.
    """

    ambient: int
    basis: IntMatrix

    @classmethod
    def from_rows(cls, ambient: int, rows: Iterable[Sequence[int]]) -> "Lattice":
        reduced = hnf_rows(list(rows), ambient)
        if reduced:
            return cls(ambient, IntMatrix.from_rows(reduced, ambient))
        return cls(ambient, IntMatrix.zeros(0, ambient))

    @classmethod
    def zero(cls, ambient: int) -> "Lattice":
        return cls(ambient, IntMatrix.zeros(0, ambient))

    @classmethod
    def full(cls, ambient: int) -> "Lattice":
        return cls(ambient, IntMatrix.identity(ambient))

    @classmethod
    def diagonal(cls, moduli: Sequence[int]) -> "Lattice":
        n = len(moduli)
        rows = []
        for i, m in enumerate(moduli):
            if m != 0:
                row = [0] * n
                row[i] = abs(m)
                rows.append(row)
        return cls.from_rows(n, rows)

    @property
    def rank(self) -> int:
        return self.basis.rows

    def rows(self) -> Tuple[Tuple[int, ...], ...]:
        return self.basis.entries

    def coords(self, v: Sequence[int]) -> Optional[Tuple[int, ...]]:
        """Integer coefficients expressing v over the basis, or None."""
        if len(v) != self.ambient:
            raise ValueError("vector length mismatch")
        vec = list(v)
        coeffs = []
        for row in self.basis.entries:
            pivot_col = next(j for j, x in enumerate(row) if x != 0)
            q, rem = divmod(vec[pivot_col], row[pivot_col])
            if rem != 0:
                return None
            if q:
                vec = [a - q * b for a, b in zip(vec, row)]
            coeffs.append(q)
        if any(vec):
            return None
        return tuple(coeffs)

    def member(self, v: Sequence[int]) -> bool:
        return self.coords(v) is not None

    def reduce(self, v: Sequence[int]) -> Tuple[int, ...]:
        """Canonical representative of v modulo the lattice.

        Each pivot coordinate lands in [0, pivot); two vectors reduce to
        the same representative iff they differ by a lattice element.
        """
        vec = list(v)
        for row in self.basis.entries:
            pivot_col = next(j for j, x in enumerate(row) if x != 0)
            q = vec[pivot_col] // row[pivot_col]
            if q:
                vec = [a - q * b for a, b in zip(vec, row)]
        return tuple(vec)

    def contains_lattice(self, other: "Lattice") -> bool:
        return all(self.member(r) for r in other.rows())

    def key(self):
        return (self.ambient, self.basis.entries)


def lattice_sum(a: Lattice, b: Lattice) -> Lattice:
    if a.ambient != b.ambient:
        raise ValueError("ambient mismatch")
    return Lattice.from_rows(a.ambient, list(a.rows()) + list(b.rows()))


def intersect(a: Lattice, b: Lattice) -> Lattice:
    """Intersection of two lattices in the same ambient Z^n."""
    if a.ambient != b.ambient:
        raise ValueError("ambient mismatch")
    if a.rank == 0 or b.rank == 0:
        return Lattice.zero(a.ambient)
    stacked = a.basis.vstack(b.basis)
    ker = left_kernel(stacked)
    rows = []
    for k in ker.rows():
        # first block of kernel coefficients recombines rows of a
        head = k[:a.rank]
        rows.append(tuple(sum(c * row[j] for c, row in zip(head, a.rows()))
                          for j in range(a.ambient)))
    return Lattice.from_rows(a.ambient, rows)


def index_of(sub: Lattice, sup: Lattice) -> IndexValue:
    """Index [sup : sub]; requires sub to be a sublattice of sup.

    Returns INFINITE exactly when rank(sub) < rank(sup).
    """
    if sub.ambient != sup.ambient:
        raise ValueError("ambient mismatch")
    coeff_rows = []
    for r in sub.rows():
        coords = sup.coords(r)
        if coords is None:
            raise ValueError("sub is not contained in sup")
        coeff_rows.append(coords)
    if sub.rank < sup.rank:
        return INFINITE
    # sub and sup have equal rank: index is |det| of the coefficient matrix
    reduced = hnf_rows(coeff_rows, sup.rank)
    if len(reduced) < sup.rank:
        return INFINITE  # defensive: cannot happen for a genuine sublattice
    idx = 1
    for row in reduced:
        idx *= row[next(j for j, x in enumerate(row) if x != 0)]
    return idx


def image(lat: Lattice, m: IntMatrix) -> Lattice:
    """Image of the lattice under the linear map given by m (rows x ambient)."""
    if m.cols != lat.ambient:
        raise ValueError("map domain mismatch")
    rows = [m.mat_vec(r) for r in lat.rows()]
    return Lattice.from_rows(m.rows, rows)


def project(lat: Lattice, cols: Sequence[int]) -> Lattice:
    """Coordinate projection of the lattice onto the listed columns."""
    rows = [tuple(r[c] for c in cols) for r in lat.rows()]
    return Lattice.from_rows(len(cols), rows)


def direct_sum(lats: Sequence[Lattice]) -> Lattice:
    total = sum(l.ambient for l in lats)
    rows = []
    offset = 0
    for l in lats:
        for r in l.rows():
            row = [0] * total
            row[offset:offset + l.ambient] = list(r)
            rows.append(row)
        offset += l.ambient
    return Lattice.from_rows(total, rows)


class SolveContext:
    """Prepared preimage solver for one map/target pair across many shifts.

    The SNF of [m | -basis(target)^T] depends only on (m, target), so a
    context computed once answers {v : m*v - shift in target} for any
    shift with a couple of matrix-vector products.
    """

    def __init__(self, m: IntMatrix, target: Lattice):
        p, q = m.rows, m.cols
        if target.ambient != p:
            raise ValueError("shape mismatch")
        r = target.rank
        a = m.hstack(target.basis.transpose().neg()) if r else m
        self._u, self._d, self._v = snf(a)
        self._p = p
        self._q = q
        self._ncols = q + r
        self._nmin = min(p, self._ncols)
        free = [j for j in range(self._ncols)
                if j >= self._nmin or self._d.entries[j][j] == 0]
        kernel_rows = [tuple(self._v.entries[i][j] for i in range(q)) for j in free]
        self.kernel = Lattice.from_rows(q, kernel_rows)

    def solve_shift(self, shift: Sequence[int]) -> Optional[Tuple[int, ...]]:
        """Particular solution for this shift, or None when there is none."""
        if len(shift) != self._p:
            raise ValueError("shape mismatch")
        b = self._u.mat_vec(shift)
        z = [0] * self._ncols
        for i in range(self._p):
            di = self._d.entries[i][i] if i < self._nmin else 0
            if di == 0:
                if b[i] != 0:
                    return None
            else:
                quot, rem = divmod(b[i], di)
                if rem != 0:
                    return None
                z[i] = quot
        w0 = self._v.mat_vec(z)
        return tuple(w0[:self._q])

    def feasibility(self) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
        """Solvability of a shift as congruences (u_row, d) on U*shift.

        A shift is solvable iff for every row, u_row . shift is divisible
        by d, where d == 0 demands the product vanish exactly.
        """
        out = []
        for i in range(self._p):
            di = self._d.entries[i][i] if i < self._nmin else 0
            out.append((self._u.entries[i], di))
        return tuple(out)

    def linear_rep(self) -> Tuple[Tuple[Fraction, ...], ...]:
        """Rational matrix L with L*shift == solve_shift(shift) on solvable shifts.

        On an unsolvable shift some divisibility condition fails and L*shift
        is meaningless; callers must test solvability separately.
        """
        pivots = [i for i in range(self._nmin) if self._d.entries[i][i] != 0]
        rows = []
        for r in range(self._q):
            row = []
            for c in range(self._p):
                acc = Fraction(0)
                for i in pivots:
                    vri = self._v.entries[r][i]
                    if vri:
                        acc += Fraction(vri * self._u.entries[i][c], self._d.entries[i][i])
                row.append(acc)
            rows.append(tuple(row))
        return tuple(rows)


def solve(m: IntMatrix, target: Lattice, shift: Sequence[int]) -> Optional[Tuple[Tuple[int, ...], Lattice]]:
    """Preimage of a lattice coset under an integer linear map.

    Solves {v in Z^q : m*v - shift in target} for m of shape p x q.
    Returns (representative, kernel lattice) or None when empty.  The
    kernel lattice is the full preimage of `target` at shift zero.
    """
    ctx = SolveContext(m, target)
    rep = ctx.solve_shift(shift)
    if rep is None:
        return None
    return rep, ctx.kernel


def coset_intersect(rep1: Sequence[int], lat1: Lattice,
                    rep2: Sequence[int], lat2: Lattice) -> Optional[Tuple[Tuple[int, ...], Lattice]]:
    """Intersection of two integer lattice cosets, or None when disjoint."""
    if lat1.ambient != lat2.ambient:
        raise ValueError("ambient mismatch")
    n = lat1.ambient
    eye = IntMatrix.identity(n)
    stacked = eye.vstack(eye)
    target = direct_sum([lat1, lat2])
    shift = tuple(rep1) + tuple(rep2)
    return solve(stacked, target, shift)
