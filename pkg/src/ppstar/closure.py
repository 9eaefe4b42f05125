"""Batched subgroup algebra over Z/q for the conjunction closure.

A finite structure has an exponent q, so every atom solution subgroup
of Z^w contains q*Z^w and is determined by its annihilator mod q.
Intersecting solution subgroups then amounts to stacking annihilator
generators, and a whole conjunction closure becomes a sequence of row
reductions instead of kernel computations.

The canonical form used here is the Howell form over Z/p**e.  A plain
echelon form is not enough: zero divisors can hide module elements
supported on a column suffix, and the trailing rows of the matrix must
generate the corresponding coordinate slice exactly (that slice is how
projections of solution subgroups are read off later).  The Howell
property restores this by adjoining p**(e-v) multiples of every pivot
row with valuation v > 0; modulo a prime nothing needs adjoining.

Everything runs in lockstep: a batch of matrices is one (B, R, w)
tensor, pivot bookkeeping lives in index arrays, and a closure with a
million joins stays inside numpy kernels.  The reductions are exact in
any integer dtype holding (q-1)**2 + q, so work arrays are int16 for
q <= 181 and int32 up to 2**15; the closures are memory bound, which
makes the narrow dtype worth the branch.  Exponents with several prime
factors are split into prime power components that are reduced side by
side and rejoined by CRT at the end.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import numpy as np

_TABLES: Dict[Tuple[int, int], tuple] = {}


def _work_dtype(q: int):
    return np.int16 if q <= 181 else np.int32


def exponent_components(q: int) -> List[Tuple[int, int]]:
    """Prime power factorization [(p, e), ...] of q, increasing p."""
    out = []
    p = 2
    while p * p <= q:
        if q % p == 0:
            e = 0
            while q % p == 0:
                q //= p
                e += 1
            out.append((p, e))
        p += 1
    if q > 1:
        out.append((q, 1))
    return out


def _tables(p: int, e: int) -> tuple:
    got = _TABLES.get((p, e))
    if got is not None:
        return got
    q = p ** e
    dt = _work_dtype(q)
    val = np.empty(q, dtype=dt)
    val[0] = e
    for x in range(1, q):
        v, y = 0, x
        while y % p == 0:
            y //= p
            v += 1
        val[x] = v
    inv_unit = np.zeros(q, dtype=dt)
    for u in range(1, q):
        if u % p:
            inv_unit[u] = pow(u, -1, q)
    ppow = np.array([p ** i for i in range(e + 1)], dtype=dt)
    made = (q, val, inv_unit, ppow)
    _TABLES[(p, e)] = made
    return made


def howell_batch(a: np.ndarray, p: int, e: int) -> Tuple[np.ndarray, np.ndarray]:
    """Howell normal form of each matrix in a batch, modulo p**e.

    a has shape (B, R0, w); rows are generators, order irrelevant.
    Returns (h, rank): per matrix the first rank rows of h are the
    canonical generators sorted by pivot column, everything below is
    zero.  Two generating sets span the same submodule of (Z/p**e)^w
    iff their h[:rank] agree.  h has R0 + w rows when e > 1 (room for
    the adjoined multiples), else R0.
    """
    q, val, inv_unit, ppow = _tables(p, e)
    B, r0, w = a.shape
    R = r0 if e == 1 else r0 + w
    dt = _work_dtype(q)
    two = p == 2
    mask = q - 1  # bit ops replace division when p is 2
    h = np.zeros((B, R, w), dtype=dt)
    if B == 0 or w == 0 or R == 0:
        return h, np.zeros(B, dtype=np.int64)
    if two:
        np.bitwise_and(a, mask, out=h[:, :r0, :], casting="unsafe")
    else:
        np.mod(a, q, out=h[:, :r0, :], casting="unsafe")
    active = np.zeros((B, R), dtype=bool)
    active[:, :r0] = True
    pivcol = np.full((B, R), w, dtype=np.int16)
    comp_ptr = np.full(B, r0, dtype=np.int64)
    ball = np.arange(B)
    tmp = np.empty((B, R, w), dtype=dt)
    for c in range(w):
        colv = h[:, :, c]
        if e == 1:
            eligible = active & (colv != 0)
            r1 = eligible.argmax(axis=1)
            has = eligible[ball, r1]
        else:
            vv = np.where(active & (colv != 0), val[colv], e)
            r1 = vv.argmin(axis=1)
            has = vv[ball, r1] < e
        if not has.any():
            continue
        prow = h[ball, r1, :]
        if e == 1:
            # a zero pivot (no eligible row) maps to inverse 0, which
            # turns every update below into a no-op for that matrix
            prow = prow * inv_unit[prow[:, c]][:, None]
            f = colv.copy()
        else:
            v1 = val[prow[:, c]]
            shift = np.where(has, v1, e)
            if two:
                prow = prow * inv_unit[prow[:, c] >> v1][:, None]
                f = colv >> shift[:, None]
            else:
                prow = prow * inv_unit[prow[:, c] // ppow[v1]][:, None]
                # the pivot has minimal valuation, so active rows
                # divide exactly; inactive rows are masked out below
                f = colv // ppow[shift][:, None]
        if two:
            prow &= mask
        else:
            prow %= q
        f *= active
        f[ball, r1] = 0
        hb = ball[has]
        rb = r1[has]
        h[hb, rb, :] = prow[has]
        np.multiply(f[:, :, None], prow[:, None, :], out=tmp)
        h -= tmp
        if two:
            h &= mask
        else:
            h %= q
        if e > 1:
            vpos = has & (v1 > 0)
            if vpos.any():
                bj = ball[vpos]
                if two:
                    comp = (prow[vpos] << (e - v1[vpos])[:, None]) & mask
                else:
                    comp = (prow[vpos] * ppow[e - v1[vpos]][:, None]) % q
                slot = comp_ptr[bj]
                h[bj, slot, :] = comp
                active[bj, slot] = True
                comp_ptr[bj] += 1
        active[hb, rb] = False
        pivcol[hb, rb] = c
    order = np.argsort(pivcol, axis=1, kind="stable")
    h = np.take_along_axis(h, order[:, :, None], axis=1)
    pc = np.take_along_axis(pivcol, order, axis=1)
    rank = (pc < w).sum(axis=1)
    top = int(rank.max())
    for j in range(1, top):
        pcj = pc[:, j]
        ok = pcj < w
        if not ok.any():
            continue
        col_idx = np.where(ok, pcj, 0)
        pval = np.where(ok, h[ball, j, col_idx], 1)
        above = np.take_along_axis(h[:, :j, :], col_idx[:, None, None],
                                   axis=2)[:, :, 0]
        f = above >> val[pval][:, None] if two else above // pval[:, None]
        f *= ok[:, None]
        h[:, :j, :] -= f[:, :, None] * h[:, j, :][:, None, :]
        if two:
            h[:, :j, :] &= mask
        else:
            h[:, :j, :] %= q
    return h, rank


def canonical_batch(a: np.ndarray, p: int, e: int) -> np.ndarray:
    """Canonical (B, w, w) int16 matrices for the row modules in a."""
    B, r, w = a.shape
    h, _ = howell_batch(a, p, e)
    if h.shape[1] >= w:
        return h[:, :w, :].astype(np.int16)
    out = np.zeros((B, w, w), dtype=np.int16)
    out[:, :h.shape[1], :] = h
    return out


class Node:
    """One subgroup reached by the closure, in dual canonical form."""

    __slots__ = ("idxs", "mats")

    def __init__(self, idxs: Tuple[int, ...], mats: List[np.ndarray]):
        self.idxs = idxs
        self.mats = mats  # per component, (w, w) int16, rows sorted, zero padded

    def key(self) -> bytes:
        return b"".join(m.tobytes() for m in self.mats)


def dual_closure(components: Sequence[Tuple[int, int]],
                 atom_rows: Sequence[Sequence[np.ndarray]],
                 w: int, max_depth: int,
                 chunk: int = 4_000_000) -> List[Node]:
    """Close the atom row modules under sums, in discovery order.

    atom_rows[i][ci] holds annihilator generators of atom i modulo the
    ci-th prime power component; summing row modules in the dual is
    intersecting the primal solution subgroups.  Depth counts atoms per
    node, mirroring a bound on conjuncts per formula.
    """
    natoms = len(atom_rows)
    ncomp = len(components)
    nodes: List[Node] = []
    if natoms == 0 or w == 0:
        return nodes
    atom_blocks: List[np.ndarray] = []
    for ci, (p, e) in enumerate(components):
        rmax = max(1, max(ar[ci].shape[0] for ar in atom_rows))
        batch = np.zeros((natoms, rmax, w), dtype=np.int32)
        for i, ar in enumerate(atom_rows):
            rows = ar[ci]
            batch[i, :rows.shape[0], :] = rows
        atom_blocks.append(canonical_batch(batch, p, e))
    seen: Dict[bytes, int] = {}
    for i in range(natoms):
        mats = [atom_blocks[ci][i] for ci in range(ncomp)]
        key = b"".join(m.tobytes() for m in mats)
        if key not in seen:
            seen[key] = len(nodes)
            nodes.append(Node((i,), mats))
    # canonical matrices in one growing store per component, doubled on
    # demand so appending fresh nodes stays amortized constant
    cap = max(1024, 2 * len(nodes))
    store = [np.zeros((cap, w, w), dtype=np.int16) for _ in range(ncomp)]
    count = len(nodes)
    for ci in range(ncomp):
        store[ci][:count] = np.stack([nd.mats[ci] for nd in nodes])
    # rows are sorted with zeros at the bottom, so per-matrix rank is
    # the nonzero row count; joins are grouped by joint rank to keep
    # the stacked tensors as short as possible
    arank = np.zeros(natoms, dtype=np.int64)
    for ci in range(ncomp):
        nz = atom_blocks[ci].any(axis=2).sum(axis=1)
        np.maximum(arank, nz, out=arank)
    nrank = [max(int((nd.mats[ci].any(axis=1)).sum()) for ci in range(ncomp))
             for nd in nodes]
    relem = max((2 * w if e == 1 else 3 * w) * w for _, e in components) * ncomp
    frontier = list(range(len(nodes)))
    depth = 1
    while frontier and depth < max_depth:
        pair_count = len(frontier) * natoms
        bs = max(1024, chunk // max(1, relem))
        new_frontier: List[int] = []
        fr = np.array(frontier, dtype=np.int64)
        nrank_np = np.array(nrank, dtype=np.int64)
        for start in range(0, pair_count, bs):
            stop = min(start + bs, pair_count)
            bsz = stop - start
            pidx = np.arange(start, stop)
            fa = fr[pidx // natoms]
            aj = pidx % natoms
            ar_of = arank[aj]
            order = np.argsort(ar_of, kind="stable")
            bounds = [0] + list(
                np.nonzero(np.diff(ar_of[order]))[0] + 1) + [bsz]
            canon = [np.empty((bsz, w, w), dtype=np.int16)
                     for _ in range(ncomp)]
            for gi in range(len(bounds) - 1):
                sel = order[bounds[gi]:bounds[gi + 1]]
                ar = int(ar_of[sel[0]])
                nmax = int(nrank_np[fa[sel]].max())
                for ci, (p, e) in enumerate(components):
                    stacked = np.empty((len(sel), nmax + ar, w),
                                       dtype=_work_dtype(p ** e))
                    stacked[:, :nmax, :] = store[ci][fa[sel], :nmax]
                    stacked[:, nmax:, :] = atom_blocks[ci][aj[sel], :ar]
                    canon[ci][sel] = canonical_batch(stacked, p, e)
            flat = np.ascontiguousarray(
                np.concatenate([m.reshape(bsz, w * w)
                                for m in canon], axis=1))
            fresh = []
            for j in range(stop - start):
                key = flat[j].tobytes()
                if key in seen:
                    continue
                parent = nodes[int(fa[j])]
                seen[key] = len(nodes)
                nodes.append(Node(parent.idxs + (int(aj[j]),),
                                  [np.array(m[j]) for m in canon]))
                nrank.append(max(int(m[j].any(axis=1).sum()) for m in canon))
                new_frontier.append(len(nodes) - 1)
                fresh.append(j)
            if fresh:
                need = count + len(fresh)
                if need > cap:
                    while cap < need:
                        cap *= 2
                    for ci in range(ncomp):
                        grown = np.zeros((cap, w, w), dtype=np.int16)
                        grown[:count] = store[ci][:count]
                        store[ci] = grown
                sel = np.array(fresh, dtype=np.int64)
                for ci in range(ncomp):
                    store[ci][count:need] = canon[ci][sel]
                count = need
        frontier = new_frontier
        depth += 1
    return nodes


def tail_rows(mat: np.ndarray, kn: int) -> np.ndarray:
    """Rows of a canonical matrix whose pivot sits at column >= kn.

    With bound coordinates ordered first these rows generate exactly
    the annihilator elements vanishing on the bound block, i.e. the
    annihilator of the projection onto the free block (Howell form
    guarantees they generate the whole slice, not just part of it).
    """
    nz = mat.any(axis=1)
    piv = np.where(nz, (mat != 0).argmax(axis=1), mat.shape[1])
    keep = nz & (piv >= kn)
    return mat[keep][:, kn:]
