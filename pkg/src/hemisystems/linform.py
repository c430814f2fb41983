"""Row vectors, matrices and quadratic forms over GF(q).

Vectors are numpy uint8 rows of encoded field elements and matrices act on
the right, so a group element g moves a vector v to v @ g.mat.  A quadratic
space carries a symmetric nonsingular Gram matrix J with bilinear form
beta(u, v) = u J v^T and quadratic form kappa(v) = beta(v, v) / 2, which is
the polarization convention for odd characteristic.

The standard model basis of the (2d+1)-dimensional ambient space is ordered
(z, e0, f0, x, y, e1, f1, ..., e_{d-2}, f_{d-2}) with beta(z, z) = 1,
beta(e_i, f_i) = 1, and the anisotropic plane <x, y> realized as
diag(1, -nu) for nu the least non-square.  W = <z, e0, f0> is parabolic of
Witt index 1 and U = W-perp is elliptic of dimension 2d - 2.
"""

from __future__ import annotations

import numpy as np

from .gf import Field


class BadRank(ValueError):
    """The rank parameter d is out of range."""


class DegenerateRestriction(ValueError):
    """The bilinear form restricted to the subspace is degenerate."""


# ---------------------------------------------------------------------------
# matrix arithmetic over encoded elements


def as_mat(rows) -> np.ndarray:
    A = np.asarray(rows, dtype=np.uint8)
    return np.atleast_2d(A)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.uint8)


def mat_mul(F: Field, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Product of encoded matrices; shapes (m, n) x (n, r) -> (m, r)."""
    if F.k == 1:
        return ((A.astype(np.int64) @ B.astype(np.int64)) % F.p).astype(np.uint8)
    ADD, MUL = F.add_table, F.mul_table
    acc = MUL[A[:, 0][:, None], B[0][None, :]]
    for t in range(1, A.shape[1]):
        acc = ADD[acc, MUL[A[:, t][:, None], B[t][None, :]]]
    return acc


def mat_mul_stack(F: Field, stack: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Apply (n, r) matrix B on the right of every matrix in an (N, m, n) stack."""
    N, m, n = stack.shape
    return mat_mul(F, stack.reshape(N * m, n), B).reshape(N, m, -1)


def vec_mat(F: Field, v: np.ndarray, B: np.ndarray) -> np.ndarray:
    return mat_mul(F, v.reshape(1, -1), B)[0]


def dot(F: Field, u: np.ndarray, v: np.ndarray) -> int:
    return int(mat_mul(F, u.reshape(1, -1), v.reshape(-1, 1))[0, 0])


def row_dots(F: Field, U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Componentwise row dot products of two (N, n) stacks."""
    if F.k == 1:
        return ((U.astype(np.int64) * V.astype(np.int64)).sum(axis=1) % F.p).astype(np.uint8)
    ADD, MUL = F.add_table, F.mul_table
    acc = MUL[U[:, 0], V[:, 0]]
    for t in range(1, U.shape[1]):
        acc = ADD[acc, MUL[U[:, t], V[:, t]]]
    return acc


def scale_rows(F: Field, s: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Multiply row i of A by scalar s[i]."""
    return F.mul_table[np.asarray(s, dtype=np.uint8)[:, None], A]


def rref(F: Field, rows) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reduced row echelon form; returns (matrix without zero rows, pivots)."""
    A = as_mat(rows).copy()
    ADD, MUL, NEG, INV = F.add_table, F.mul_table, F.neg_table, F.inv_table
    m, n = A.shape
    pivots = []
    r = 0
    for col in range(n):
        if r == m:
            break
        hits = np.nonzero(A[r:, col])[0]
        if hits.size == 0:
            continue
        lead = r + int(hits[0])
        if lead != r:
            A[[r, lead]] = A[[lead, r]]
        A[r] = MUL[INV[A[r, col]], A[r]]
        others = np.nonzero(A[:, col])[0]
        others = others[others != r]
        if others.size:
            A[others] = ADD[A[others], MUL[NEG[A[others, col]][:, None], A[r][None, :]]]
        pivots.append(col)
        r += 1
    return A[:r], tuple(pivots)


def rref_batch(F: Field, mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """RREF every matrix of an (N, m, n) stack; returns (stack, ranks)."""
    A = np.array(mats, dtype=np.uint8)
    ADD, MUL, NEG, INV = F.add_table, F.mul_table, F.neg_table, F.inv_table
    N, m, n = A.shape
    cur = np.zeros(N, dtype=np.int64)
    rowidx = np.arange(m)
    for col in range(n):
        colv = A[:, :, col]
        elig = (colv != 0) & (rowidx[None, :] >= cur[:, None]) & (cur[:, None] < m)
        has = elig.any(axis=1)
        if not has.any():
            continue
        idx = np.nonzero(has)[0]
        first = np.where(elig[idx], rowidx[None, :], m).min(axis=1)
        dst = cur[idx]
        need = first != dst
        if need.any():
            ii, s, t = idx[need], first[need], dst[need]
            tmp = A[ii, s].copy()
            A[ii, s] = A[ii, t]
            A[ii, t] = tmp
        prow = MUL[INV[A[idx, dst, col]][:, None], A[idx, dst]]
        sub = A[idx]
        upd = ADD[sub, MUL[NEG[sub[:, :, col]][:, :, None], prow[:, None, :]]]
        upd[np.arange(len(idx)), dst] = prow
        A[idx] = upd
        cur[idx] += 1
    return A, cur


def mat_inv(F: Field, A: np.ndarray) -> np.ndarray:
    A = as_mat(A)
    n = A.shape[0]
    aug = np.concatenate([A, identity(n)], axis=1)
    R, piv = rref(F, aug)
    if len(piv) < n or tuple(piv[:n]) != tuple(range(n)):
        raise ValueError("matrix is singular")
    return R[:, n:].copy()


def mat_det(F: Field, A: np.ndarray) -> int:
    A = as_mat(A).copy()
    n = A.shape[0]
    det = 1
    for col in range(n):
        hits = np.nonzero(A[col:, col])[0]
        if hits.size == 0:
            return 0
        lead = col + int(hits[0])
        if lead != col:
            A[[col, lead]] = A[[lead, col]]
            det = F.neg(det)
        det = F.mul(det, int(A[col, col]))
        inv = F.inv(int(A[col, col]))
        A[col] = F.mul_table[inv, A[col]]
        below = col + 1 + np.nonzero(A[col + 1:, col])[0]
        if below.size:
            A[below] = F.add_table[A[below], F.mul_table[F.neg_table[A[below, col]][:, None], A[col][None, :]]]
    return det


def nullspace(F: Field, A: np.ndarray) -> np.ndarray:
    """Basis (as RREF rows) of {v : A v^T = 0}."""
    A = as_mat(A)
    n = A.shape[1]
    R, piv = rref(F, A)
    free = [j for j in range(n) if j not in piv]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, j in enumerate(free):
        basis[i, j] = 1
        for r, pc in enumerate(piv):
            basis[i, pc] = F.neg(int(R[r, j]))
    return rref(F, basis)[0] if len(free) else basis


def all_vectors(q: int, length: int) -> np.ndarray:
    """All q^length coordinate tuples, lexicographically ascending."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.uint8)
    return np.indices((q,) * length, dtype=np.uint8).reshape(length, -1).T.copy()


def format_matrix(F: Field, A: np.ndarray) -> str:
    A = as_mat(A)
    return "|".join(";".join(F.format_elt(int(a)) for a in row) for row in A)


def parse_matrix(F: Field, s: str) -> np.ndarray:
    rows = [[F.parse_elt(t) for t in line.split(";")] for line in s.split("|")]
    return as_mat(rows)


# ---------------------------------------------------------------------------
# subspaces


class Subspace:
    """A subspace held by its RREF basis; equal iff equal as point sets."""

    __slots__ = ("basis", "key")

    def __init__(self, F: Field, rows, reduced: bool = False):
        A = as_mat(rows)
        if not reduced:
            A, _ = rref(F, A)
        A = np.array(A, dtype=np.uint8, order="C")
        A.setflags(write=False)
        self.basis = A
        self.key = (A.shape[0], A.tobytes())

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def contains_vector(self, F: Field, v) -> bool:
        return not reduce_vector(F, self.basis, np.asarray(v, dtype=np.uint8)).any()

    def __eq__(self, other):
        return isinstance(other, Subspace) and self.key == other.key

    def __lt__(self, other):
        return self.key < other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def reduce_vector(F: Field, rref_rows: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Remainder of v modulo the row space of an RREF matrix."""
    out = v.astype(np.uint8).copy()
    for row in rref_rows:
        pivot = int(np.argmax(row != 0))
        c = int(out[pivot])
        if c:
            out = F.add_table[out, F.mul_table[F.neg(c), row]]
    return out


# ---------------------------------------------------------------------------
# quadratic spaces


class QuadraticSpace:
    """A vector space with a symmetric nonsingular Gram matrix."""

    def __init__(self, F: Field, gram):
        G = as_mat(gram)
        if G.shape[0] != G.shape[1] or (G != G.T).any():
            raise ValueError("Gram matrix must be square and symmetric")
        if mat_det(F, G) == 0:
            raise ValueError("Gram matrix is singular")
        self.field = F
        self.gram = np.array(G, dtype=np.uint8, order="C")
        self.gram.setflags(write=False)
        self.dim = G.shape[0]
        self._half = F.inv(F.add(1, 1))

    def beta(self, u, v) -> int:
        F = self.field
        u = np.asarray(u, dtype=np.uint8)
        v = np.asarray(v, dtype=np.uint8)
        return dot(F, vec_mat(F, u, self.gram), v)

    def kappa(self, v) -> int:
        return self.field.mul(self._half, self.beta(v, v))

    def kappa_batch(self, V: np.ndarray) -> np.ndarray:
        F = self.field
        W = mat_mul(F, V, self.gram)
        return F.mul_table[self._half, row_dots(F, W, V)]

    def restrict_gram(self, basis: np.ndarray) -> np.ndarray:
        B = as_mat(basis)
        return mat_mul(self.field, mat_mul(self.field, B, self.gram), B.T)

    def perp(self, S: Subspace) -> Subspace:
        rows = nullspace(self.field, mat_mul(self.field, S.basis, self.gram))
        return Subspace(self.field, rows, reduced=True)

    def totally_singular(self, basis) -> bool:
        return not self.restrict_gram(basis).any()


# ---------------------------------------------------------------------------
# Witt decomposition


def _anisotropic_vector(space: QuadraticSpace):
    """A vector with kappa != 0 in a nondegenerate space, or None if dim 0."""
    G = space.gram
    n = space.dim
    if n == 0:
        return None
    dg = np.nonzero(G.diagonal())[0]
    if dg.size:
        v = np.zeros(n, dtype=np.uint8)
        v[dg[0]] = 1
        return v
    rows, cols = np.nonzero(G)
    i, j = int(rows[0]), int(cols[0])
    v = np.zeros(n, dtype=np.uint8)
    v[i] = 1
    v[j] = 1
    # beta(v, v) = 2 G[i, j] != 0 since the diagonal vanishes
    return v


def _find_singular_vector(space: QuadraticSpace):
    """A nonzero singular vector, or None in an anisotropic space."""
    vecs = all_vectors(space.field.q, space.dim)
    vals = space.kappa_batch(vecs)
    hits = np.nonzero(vals == 0)[0]
    hits = hits[hits != 0]
    if hits.size == 0:
        return None
    return vecs[hits[0]]


def _witt_of_gram(F: Field, G: np.ndarray) -> int:
    space = QuadraticSpace(F, G)
    v = _find_singular_vector(space)
    if v is None:
        return 0
    # extend v to a hyperbolic pair (v, w): beta(v, w) = 1, kappa(w) = 0
    bv = mat_mul(F, v.reshape(1, -1), G)[0]
    j = int(np.nonzero(bv)[0][0])
    w = np.zeros(space.dim, dtype=np.uint8)
    w[j] = F.inv(int(bv[j]))
    kw = space.kappa(w)
    if kw:
        w = F.add_table[w, F.mul_table[F.neg(kw), v]]
    pair = np.stack([v, w])
    comp = nullspace(F, mat_mul(F, pair, G))
    if comp.shape[0] == 0:
        return 1
    return 1 + _witt_of_gram(F, space.restrict_gram(comp))


def witt_index(space: QuadraticSpace, S: Subspace | None = None) -> int:
    """Witt index of the form restricted to S (whole space if omitted)."""
    F = space.field
    if S is None:
        G = space.gram
    else:
        G = space.restrict_gram(S.basis)
        if mat_det(F, G) == 0:
            raise DegenerateRestriction("restricted form is degenerate")
    if G.shape[0] == 0:
        return 0
    return _witt_of_gram(F, G)


def classify_type(space: QuadraticSpace, S: Subspace | None = None) -> str:
    """One of 'parabolic', 'hyperbolic', 'elliptic' for a nondegenerate restriction."""
    dim = space.dim if S is None else S.dim
    w = witt_index(space, S)
    if dim % 2 == 1:
        assert w == (dim - 1) // 2
        return "parabolic"
    if w == dim // 2:
        return "hyperbolic"
    assert w == dim // 2 - 1
    return "elliptic"


# ---------------------------------------------------------------------------
# the standard model


class StandardModel:
    """Ambient (2d+1)-space with the block Gram matrix of the standard basis.

    Coordinates are ordered (z, e0, f0, x, y, e1, f1, ..., e_{d-2}, f_{d-2}).
    Exposes the parabolic 3-space W = <z, e0, f0>, its perp U, and the least
    non-square nu used for the anisotropic plane <x, y>.
    """

    def __init__(self, F: Field, d: int):
        if d < 2:
            raise BadRank(f"rank d={d} must be >= 2")
        n = 2 * d + 1
        nu = F.first_nonsquare
        G = np.zeros((n, n), dtype=np.uint8)
        G[0, 0] = 1
        G[1, 2] = G[2, 1] = 1
        G[3, 3] = 1
        G[4, 4] = F.neg(nu)
        for i in range(d - 2):
            a, b = 5 + 2 * i, 6 + 2 * i
            G[a, b] = G[b, a] = 1
        self.field = F
        self.d = d
        self.dim = n
        self.nu = nu
        self.space = QuadraticSpace(F, G)
        self.w_indices = (0, 1, 2)
        self.u_indices = tuple(range(3, n))
        wb = np.zeros((3, n), dtype=np.uint8)
        wb[0, 0] = wb[1, 1] = wb[2, 2] = 1
        self.w_subspace = Subspace(F, wb, reduced=True)
        ub = np.zeros((n - 3, n), dtype=np.uint8)
        for i in range(n - 3):
            ub[i, 3 + i] = 1
        self.u_subspace = Subspace(F, ub, reduced=True)
        self.w_space = QuadraticSpace(F, G[:3, :3])
        self.u_space = QuadraticSpace(F, G[3:, 3:])
        self._check()

    def _check(self):
        F, sp = self.field, self.space
        half = F.inv(F.add(1, 1))
        assert sp.kappa(self.basis_vector(0)) == half
        assert sp.beta(self.basis_vector(1), self.basis_vector(2)) == 1
        # <x, y> block is anisotropic: only the zero vector is singular
        plane = all_vectors(F.q, 2)
        kp = QuadraticSpace(F, sp.gram[3:5, 3:5]).kappa_batch(plane)
        assert (kp[1:] != 0).all()
        assert self.space.perp(self.w_subspace) == self.u_subspace
        assert witt_index(self.w_space) == 1
        assert witt_index(self.u_space) == self.d - 2

    def basis_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.uint8)
        v[i] = 1
        return v

    @property
    def basis_names(self) -> tuple:
        names = ["z", "e0", "f0", "x", "y"]
        for i in range(1, self.d - 1):
            names += [f"e{i}", f"f{i}"]
        return tuple(names)


def standard_model(F: Field, d: int) -> StandardModel:
    return StandardModel(F, d)
