"""Points and maximal totally singular subspaces of the quadric kappa = 0.

Points are the projective singular points, each kept as its unit vector
(first nonzero coordinate scaled to 1) and ordered by the integer code of
that vector read as base-q digits, most significant coordinate first.
Maximals (totally singular d-subspaces) are kept as RREF bases and ordered
row-major lexicographically.

Enumeration is depth-first extension with the reduced basis as the
deduplicator: a totally singular S in RREF extends only by singular points
whose leading coordinate lies beyond the last pivot of S.  Every extension
then stacks into an RREF matrix whose leading rows are exactly S, so each
subspace is produced exactly once, from its unique RREF-prefix parent.

The incidence index between points and maximals is built eagerly and checked
for regularity: each maximal carries s + 1 = (q^d - 1)/(q - 1) points and
each point lies on t + 1 = prod_{i<d} (q^i + 1) maximals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf import Field
from .linform import (
    StandardModel,
    Subspace,
    all_vectors,
    mat_mul,
    mat_mul_stack,
    reduce_vector,
    rref_batch,
)
from .orbits import ActionEscape


class NotMaximal(ValueError):
    """The subspace is not a totally singular d-subspace."""


def point_count(q: int, d: int) -> int:
    return (q ** (2 * d) - 1) // (q - 1)


def maximal_count(q: int, d: int) -> int:
    out = 1
    for i in range(1, d + 1):
        out *= q**i + 1
    return out


def points_per_maximal(q: int, d: int) -> int:
    return (q**d - 1) // (q - 1)


def maximals_per_point(q: int, d: int) -> int:
    out = 1
    for i in range(1, d):
        out *= q**i + 1
    return out


def enumerate_points(model: StandardModel) -> np.ndarray:
    """All singular projective points as unit vectors, in canonical order."""
    F, n = model.field, model.dim
    q = F.q
    blocks = []
    for j in range(n - 1, -1, -1):
        tails = all_vectors(q, n - 1 - j)
        vecs = np.zeros((tails.shape[0], n), dtype=np.uint8)
        vecs[:, j] = 1
        vecs[:, j + 1:] = tails
        keep = model.space.kappa_batch(vecs) == 0
        blocks.append(vecs[keep])
    return np.concatenate(blocks, axis=0)


def enumerate_maximals(model: StandardModel, points: np.ndarray | None = None) -> np.ndarray:
    """All totally singular d-subspaces as an (N, d, n) stack of RREF bases."""
    F, n, d = model.field, model.dim, model.d
    J = model.space.gram
    pts = enumerate_points(model) if points is None else points
    piv = np.argmax(pts != 0, axis=1)
    cand, cand_piv, cand_bj = [], [], []
    for lead in range(n):
        sel = piv > lead
        cand.append(pts[sel])
        cand_piv.append(piv[sel])
        cand_bj.append(mat_mul(F, pts[sel], J) if sel.any() else np.zeros((0, n), np.uint8))
    bases = pts[:, None, :]
    last = piv
    for depth in range(1, d):
        chunks, chunk_piv = [], []
        for i in range(bases.shape[0]):
            lead = int(last[i])
            pool = cand[lead]
            if not pool.shape[0]:
                continue
            S = bases[i]
            # the child [S; v] must be the RREF of the subspace it spans, so v
            # is orthogonal to S and S is already zero in v's pivot column
            prods = mat_mul(F, cand_bj[lead], S.T)
            ok = ~(prods != 0).any(axis=1)
            ok &= ~(S[:, cand_piv[lead]] != 0).any(axis=0)
            if not ok.any():
                continue
            V = pool[ok]
            top = np.broadcast_to(S, (V.shape[0],) + S.shape)
            chunks.append(np.concatenate([top, V[:, None, :]], axis=1))
            chunk_piv.append(cand_piv[lead][ok])
        bases = np.concatenate(chunks, axis=0)
        last = np.concatenate(chunk_piv)
    flat = bases.reshape(bases.shape[0], -1)
    order = np.lexsort(flat.T[::-1])
    return np.ascontiguousarray(bases[order])


def _vector_codes(vecs: np.ndarray, q: int) -> np.ndarray:
    n = vecs.shape[1]
    if q**n >= 2**62:
        raise ValueError("coordinate codes would overflow")
    pows = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return vecs.astype(np.int64) @ pows


class QuadricModel:
    """The full point-maximal geometry of a standard model, with incidence."""

    def __init__(self, model: StandardModel):
        self.model = model
        F = model.field
        self.field = F
        self.d = model.d
        self.dim = model.dim
        q = F.q
        self.s1 = points_per_maximal(q, model.d)
        self.t1 = maximals_per_point(q, model.d)
        assert self.t1 % 2 == 0
        self.target_degree = self.t1 // 2

        self.points = enumerate_points(model)
        self.num_points = self.points.shape[0]
        assert self.num_points == point_count(q, model.d)

        # codes of every nonzero multiple of every point, for O(log) vector lookup
        mults = [F.mul_table[lam, self.points] for lam in range(1, q)]
        codes = np.concatenate([_vector_codes(m, q) for m in mults])
        pids = np.tile(np.arange(self.num_points, dtype=np.int64), q - 1)
        order = np.argsort(codes)
        self._vec_codes = codes[order]
        self._vec_pid = pids[order]

        self.maximal_bases = enumerate_maximals(model, self.points)
        self.num_maximals = self.maximal_bases.shape[0]
        assert self.num_maximals == maximal_count(q, model.d)
        self._check_totally_singular()
        flat = np.ascontiguousarray(self.maximal_bases.reshape(self.num_maximals, -1))
        blob = flat.tobytes()
        w = flat.shape[1]
        self.maximal_index = {blob[i * w:(i + 1) * w]: i for i in range(self.num_maximals)}
        assert len(self.maximal_index) == self.num_maximals

        self.maximal_points = self._build_incidence()
        degrees = np.bincount(self.maximal_points.ravel(), minlength=self.num_points)
        assert (degrees == self.t1).all()
        order = np.argsort(self.maximal_points.ravel(), kind="stable")
        self.point_maximals = np.repeat(
            np.arange(self.num_maximals, dtype=np.int64), self.s1
        )[order].reshape(self.num_points, self.t1)

    def _check_totally_singular(self):
        # restricted Gram (basis J basis^T) must vanish entrywise, chunked
        F, B = self.field, self.maximal_bases
        for start in range(0, self.num_maximals, 8192):
            chunk = B[start:start + 8192]
            g = mat_mul_stack(F, chunk, self.model.space.gram)
            if F.k == 1:
                pr = (g.astype(np.int64) @ chunk.astype(np.int64).transpose(0, 2, 1)) % F.p
            else:
                MUL, ADD = F.mul_table, F.add_table
                pr = MUL[g[:, :, 0][:, :, None], chunk[:, :, 0][:, None, :]]
                for t in range(1, self.dim):
                    pr = ADD[pr, MUL[g[:, :, t][:, :, None], chunk[:, :, t][:, None, :]]]
            assert not pr.any()

    def _build_incidence(self) -> np.ndarray:
        F, q, d = self.field, self.field.q, self.d
        combos = all_vectors(q, d)[1:]
        out = np.empty((self.num_maximals, self.s1), dtype=np.int64)
        MUL, ADD = F.mul_table, F.add_table
        for start in range(0, self.num_maximals, 4096):
            chunk = self.maximal_bases[start:start + 4096]
            if F.k == 1:
                span = (combos.astype(np.int64)[None, :, :] @ chunk.astype(np.int64)) % F.p
            else:
                span = MUL[combos[:, 0][None, :, None], chunk[:, 0][:, None, :]]
                for t in range(1, d):
                    span = ADD[span, MUL[combos[:, t][None, :, None], chunk[:, t][:, None, :]]]
            codes = span.astype(np.int64) @ (q ** np.arange(self.dim - 1, -1, -1, dtype=np.int64))
            pos = np.searchsorted(self._vec_codes, codes)
            if (pos >= self._vec_codes.size).any() or (self._vec_codes[pos] != codes).any():
                raise RuntimeError("maximal contains a vector outside the point set")
            pids = self._vec_pid[pos]
            pids.sort(axis=1)
            sel = pids[:, :: q - 1]
            assert (np.repeat(sel, q - 1, axis=1) == pids).all()
            out[start:start + 4096] = sel
        return out

    # -- lookups

    def point_vector(self, i: int) -> np.ndarray:
        return self.points[i]

    def point_id(self, v) -> int:
        code = _vector_codes(np.asarray(v, dtype=np.uint8).reshape(1, -1), self.field.q)
        pos = np.searchsorted(self._vec_codes, code)
        if pos[0] >= self._vec_codes.size or self._vec_codes[pos[0]] != code[0]:
            raise ActionEscape("vector is not a singular point of the quadric")
        return int(self._vec_pid[pos[0]])

    def maximal_subspace(self, i: int) -> Subspace:
        return Subspace(self.field, self.maximal_bases[i], reduced=True)

    def maximal_id(self, S: Subspace) -> int:
        key = S.basis.tobytes()
        if key not in self.maximal_index:
            raise ActionEscape("subspace is not a maximal of the quadric")
        return self.maximal_index[key]

    # -- permutations induced by isometries

    def point_permutation(self, mat: np.ndarray) -> np.ndarray:
        F, q = self.field, self.field.q
        img = mat_mul(F, self.points, mat)
        codes = _vector_codes(img, q)
        pos = np.searchsorted(self._vec_codes, codes)
        if (pos >= self._vec_codes.size).any() or (self._vec_codes[pos] != codes).any():
            raise ActionEscape("image of a point is not a point")
        return self._vec_pid[pos].copy()

    def maximal_permutation(self, mat: np.ndarray) -> np.ndarray:
        F = self.field
        img = mat_mul_stack(F, self.maximal_bases, mat)
        red, ranks = rref_batch(F, img)
        assert (ranks == self.d).all()
        flat = np.ascontiguousarray(red.reshape(self.num_maximals, -1))
        blob = flat.tobytes()
        w = flat.shape[1]
        out = np.empty(self.num_maximals, dtype=np.int64)
        index = self.maximal_index
        try:
            for i in range(self.num_maximals):
                out[i] = index[blob[i * w:(i + 1) * w]]
        except KeyError as exc:
            raise ActionEscape("image of a maximal is not a maximal") from exc
        return out


def incidence(F: Field, point_vec, basis) -> bool:
    """Whether the point lies in the row space of the RREF basis."""
    return not reduce_vector(F, np.asarray(basis, dtype=np.uint8), np.asarray(point_vec, dtype=np.uint8)).any()


def z_projection_nontrivial(M: Subspace | np.ndarray) -> bool:
    """Whether some vector of the subspace has a nonzero z coordinate."""
    basis = M.basis if isinstance(M, Subspace) else np.asarray(M)
    return bool((basis[:, 0] != 0).any())


@dataclass(frozen=True)
class MaximalBasisForm:
    """Normal form of a maximal basis relative to (z, e0, f0) and U.

    case 1: b1 = z + u1, b2 = e0 + u2, b3 = f0 + u3, rest pure U
    case 2: b1 = z + lam f0 + u1, b2 = e0 + mu f0 + u2, rest pure U
    case 3: b1 = z + lam e0 + u1, b2 = f0 + u2, rest pure U
    """

    case: int
    lam: int | None
    mu: int | None
    u_parts: tuple

    def reassemble(self, model: StandardModel) -> Subspace:
        F, n = model.field, model.dim
        z, e0, f0 = (model.basis_vector(i) for i in range(3))
        u = [np.asarray(x, dtype=np.uint8) for x in self.u_parts]
        ADD, MUL = F.add_table, F.mul_table
        if self.case == 1:
            lead = [ADD[z, u[0]], ADD[e0, u[1]], ADD[f0, u[2]]]
            rest = u[3:]
        elif self.case == 2:
            b1 = ADD[ADD[z, MUL[self.lam, f0]], u[0]]
            b2 = ADD[ADD[e0, MUL[self.mu, f0]], u[1]]
            lead, rest = [b1, b2], u[2:]
        else:
            b1 = ADD[ADD[z, MUL[self.lam, e0]], u[0]]
            b2 = ADD[f0, u[1]]
            lead, rest = [b1, b2], u[2:]
        return Subspace(F, np.stack(lead + list(rest)))


def basis_normal_form(model: StandardModel, M: Subspace) -> MaximalBasisForm:
    """Case analysis of a maximal's basis over the (z, e0, f0) coordinates."""
    F = model.field
    d = model.d
    if M.dim != d or not model.space.totally_singular(M.basis):
        raise NotMaximal("expected a totally singular subspace of dimension d")
    rows = M.basis.copy()
    assert rows[0, 0] == 1 and not rows[1:, 0].any(), "maximal must project onto z"
    ADD, MUL, NEG, INV = F.add_table, F.mul_table, F.neg_table, F.inv_table
    b1 = rows[0].copy()
    res = rows[1:].copy()
    r = 0
    for col in (1, 2):
        hits = np.nonzero(res[r:, col])[0]
        if hits.size == 0:
            continue
        lead = r + int(hits[0])
        if lead != r:
            res[[r, lead]] = res[[lead, r]]
        res[r] = MUL[INV[res[r, col]], res[r]]
        others = np.nonzero(res[:, col])[0]
        others = others[others != r]
        if others.size:
            res[others] = ADD[res[others], MUL[NEG[res[others, col]][:, None], res[r][None, :]]]
        r += 1
    rank = r
    assert rank >= 1, "residual rows must project onto <e0, f0>"

    def strip(v, cols):
        out = v.copy()
        out[list(cols)] = 0
        return out

    if rank == 2:
        b2, b3 = res[0], res[1]
        rest = res[2:]
        b1 = ADD[b1, MUL[NEG[b1[1]], b2]]
        b1 = ADD[b1, MUL[NEG[b1[2]], b3]]
        assert not rest[:, :3].any()
        u_parts = (strip(b1, (0,)), strip(b2, (1,)), strip(b3, (2,)), *rest)
        return MaximalBasisForm(1, None, None, u_parts)
    b2 = res[0]
    rest = res[1:]
    assert not rest[:, :3].any()
    if b2[1] != 0:
        mu = int(b2[2])
        b1 = ADD[b1, MUL[NEG[b1[1]], b2]]
        lam = int(b1[2])
        u_parts = (strip(b1, (0, 2)), strip(b2, (1, 2)), *rest)
        return MaximalBasisForm(2, lam, mu, u_parts)
    b1 = ADD[b1, MUL[NEG[b1[2]], b2]]
    lam = int(b1[1])
    u_parts = (strip(b1, (0, 1)), strip(b2, (2,)), *rest)
    return MaximalBasisForm(3, lam, None, u_parts)
