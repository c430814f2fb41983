"""Matrix groups acting on the standard model.

The three-dimensional orthogonal block is produced from SL2(q): the
symmetric square of the natural action preserves the discriminant form of
binary quadratics, and a change of basis carries it onto the W block of the
standard Gram matrix.  The image is Omega(W), of order q(q^2 - 1)/2, and the
reflection in z extends it to an index-two overgroup.

All matrices act on row vectors from the right, so (g * h) means "g first".
"""

from __future__ import annotations

import numpy as np

from .gf import Field
from .linform import (
    QuadraticSpace,
    StandardModel,
    all_vectors,
    identity,
    mat_det,
    mat_inv,
    mat_mul,
)
from .orbits import ActionEscape, OrbitPartition, partition


class GenerationFailure(RuntimeError):
    """A generated group did not close to its expected order."""


class NotUnimodular(ValueError):
    """The symmetric square is only taken of determinant-one matrices."""


class NoIsometry(ValueError):
    """The two quadratic spaces are not similar."""


class GroupElement:
    """An invertible matrix over a fixed field, hashable by its entries."""

    __slots__ = ("field", "mat", "key")

    def __init__(self, field: Field, mat):
        M = np.array(mat, dtype=np.uint8, order="C")
        M.setflags(write=False)
        self.field = field
        self.mat = M
        self.key = M.tobytes()

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.field, mat_mul(self.field, self.mat, other.mat))

    def inverse(self) -> "GroupElement":
        return GroupElement(self.field, mat_inv(self.field, self.mat))

    def is_identity(self) -> bool:
        return np.array_equal(self.mat, identity(self.mat.shape[0]))

    def order(self) -> int:
        n, acc = 1, self
        while not acc.is_identity():
            acc, n = acc * self, n + 1
            if n > self.field.q ** self.mat.shape[0] ** 2:
                raise GenerationFailure("element order runaway")
        return n

    def __eq__(self, other):
        return isinstance(other, GroupElement) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"GroupElement({self.mat.tolist()})"


class GeneratedGroup:
    """A finite matrix group held as an explicit element list."""

    def __init__(self, field: Field, generators, elements):
        self.field = field
        self.generators = tuple(generators)
        self.elements = tuple(elements)
        self._keys = {g.key for g in self.elements}

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g: GroupElement) -> bool:
        return g.key in self._keys


def mulclose(field: Field, generators, limit: int) -> GeneratedGroup:
    """Close a generator list under multiplication; the identity is included."""
    gens = list(generators)
    n = gens[0].mat.shape[0]
    ident = GroupElement(field, identity(n))
    elements = {ident.key: ident}
    frontier = [ident]
    while frontier:
        fresh = []
        for f in frontier:
            for g in gens:
                h = f * g
                if h.key not in elements:
                    elements[h.key] = h
                    fresh.append(h)
                    if len(elements) > limit:
                        raise GenerationFailure(
                            f"closure exceeded {limit} elements"
                        )
        frontier = fresh
    return GeneratedGroup(field, gens, elements.values())


def sl2_generators(field: Field) -> list[GroupElement]:
    """Transvections over a characteristic basis, plus the Weyl rotation."""
    F = field
    one, neg1 = 1, F.neg(1)
    gens = []
    for i in range(F.k):
        alpha = F.p**i  # the i-th power basis element
        gens.append(GroupElement(F, [[one, alpha], [0, one]]))
        gens.append(GroupElement(F, [[one, 0], [alpha, one]]))
    gens.append(GroupElement(F, [[0, one], [neg1, 0]]))
    return gens


def special_linear_group(field: Field) -> GeneratedGroup:
    """All of SL2(q), checked against its known order q(q^2 - 1)."""
    F = field
    expected = F.q * (F.q**2 - 1)
    group = mulclose(F, sl2_generators(F), limit=expected)
    if group.order != expected:
        raise GenerationFailure(
            f"SL2({F.q}) closed at {group.order}, expected {expected}"
        )
    return group


def sym_square(field: Field, g: GroupElement | np.ndarray) -> np.ndarray:
    """Matrix of g on coefficient rows (a, b, c) of binary quadratics.

    The row of f(x, y) = ax^2 + bxy + cy^2 maps to the coefficient row of
    the substituted form f((x, y) g^{-1}).  Substituting the inverse makes
    the assignment multiplicative for the right action, and substitution by
    a determinant-one matrix preserves the discriminant b^2 - 4ac.
    """
    F = field
    M = g.mat if isinstance(g, GroupElement) else np.asarray(g, dtype=np.uint8)
    if mat_det(F, M) != 1:
        raise NotUnimodular("symmetric square requires determinant one")
    # entries of the inverse, explicit for a determinant-one 2x2 matrix
    a, b = int(M[1, 1]), F.neg(int(M[0, 1]))
    c, d = F.neg(int(M[1, 0])), int(M[0, 0])
    mul, add = F.mul, F.add
    two = add(1, 1)
    return np.array(
        [
            [mul(a, a), mul(two, mul(a, c)), mul(c, c)],
            [mul(a, b), add(mul(a, d), mul(b, c)), mul(c, d)],
            [mul(b, b), mul(two, mul(b, d)), mul(d, d)],
        ],
        dtype=np.uint8,
    )


def discriminant_gram(field: Field) -> np.ndarray:
    """Gram matrix of the discriminant form b^2 - 4ac on coefficient rows."""
    F = field
    four = F.add(F.add(1, 1), F.add(1, 1))
    m4 = F.neg(four)
    return np.array([[0, 0, m4], [0, F.add(1, 1), 0], [m4, 0, 0]], dtype=np.uint8)


def _diagonalize(space: QuadraticSpace) -> tuple[np.ndarray, np.ndarray]:
    """Rows C with C J C^T diagonal, every entry 1 except a possible final nu."""
    F, J = space.field, space.gram
    n = J.shape[0]
    nu = F.first_nonsquare
    rows = identity(n)

    def beta(u, v):
        return int(mat_mul(F, mat_mul(F, u.reshape(1, -1), J), v.reshape(-1, 1))[0, 0])

    norms = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        sub = rows[i:]
        G = mat_mul(F, mat_mul(F, sub, J), sub.T)
        diag = np.nonzero(np.diagonal(G))[0]
        if diag.size:
            t = int(diag[0])
        else:
            rr, cc = np.nonzero(G)
            if rr.size == 0:
                raise NoIsometry("degenerate block during diagonalization")
            # two distinct singular rows pairing nontrivially: their sum is
            # anisotropic of norm 2 G[t, u], nonzero in odd characteristic
            t, u = int(rr[0]), int(cc[0])
            rows[i + t] = F.add_table[rows[i + t], rows[i + u]]
        if t:
            rows[[i, i + t]] = rows[[i + t, i]]
        v = rows[i].copy()
        s = beta(v, v)
        if F.is_square(s):
            v = F.mul_table[F.inv(F.sqrt(s)), v]
            norms[i] = 1
        else:
            v = F.mul_table[F.inv(F.sqrt(F.div(s, nu))), v]
            norms[i] = nu
        rows[i] = v
        d = int(norms[i])
        for j in range(i + 1, n):
            coef = F.div(beta(rows[j], v), d)
            rows[j] = F.add_table[rows[j], F.mul_table[F.neg(coef), v]]

    # fuse pairs of nu-norm rows into pairs of norm-one rows
    x = y = None
    for cand in range(F.q):
        rem = F.sub(F.inv(nu), F.mul(cand, cand))
        if F.is_square(rem):
            x, y = cand, F.sqrt(rem)
            break
    assert x is not None, "1/nu is always a sum of two squares"
    while True:
        bad = np.nonzero(norms == nu)[0]
        if bad.size < 2:
            break
        i, j = int(bad[0]), int(bad[1])
        ri, rj = rows[i].copy(), rows[j].copy()
        rows[i] = F.add_table[F.mul_table[x, ri], F.mul_table[y, rj]]
        rows[j] = F.add_table[F.mul_table[y, ri], F.mul_table[F.neg(x), rj]]
        norms[i] = norms[j] = 1
    bad = np.nonzero(norms == nu)[0]
    if bad.size == 1 and bad[0] != n - 1:
        i = int(bad[0])
        rows[[i, n - 1]] = rows[[n - 1, i]]
        norms[[i, n - 1]] = norms[[n - 1, i]]
    check = mat_mul(F, mat_mul(F, rows, J), rows.T)
    assert np.array_equal(check, np.diag(norms))
    return rows, norms


def witt_isometry(to_space: QuadraticSpace, from_space: QuadraticSpace):
    """T and scalar c with T J_from T^T = c J_to, c in {1, nu}.

    Conjugation by T then carries isometries of the source form onto
    isometries of the target form.
    """
    F = to_space.field
    if from_space.field != F or to_space.dim != from_space.dim:
        raise NoIsometry("spaces are not comparable")
    cf, nf = _diagonalize(from_space)
    ct, nt = _diagonalize(to_space)
    if np.array_equal(nf, nt):
        T = mat_mul(F, mat_inv(F, ct), cf)
        c = 1
    else:
        nu = F.first_nonsquare
        scaled = QuadraticSpace(F, F.mul_table[nu, to_space.gram])
        ct2, nt2 = _diagonalize(scaled)
        if not np.array_equal(nf, nt2):
            raise NoIsometry("forms are not similar")
        T = mat_mul(F, mat_inv(F, ct2), cf)
        c = nu
    lhs = mat_mul(F, mat_mul(F, T, from_space.gram), T.T)
    assert np.array_equal(lhs, F.mul_table[c, to_space.gram])
    return T, c


def embed_w_block(field: Field, block: np.ndarray, dim: int) -> np.ndarray:
    """Extend a 3x3 matrix on W by the identity on U."""
    M = identity(dim)
    M[:3, :3] = block
    return M


def omega_w(model: StandardModel) -> GeneratedGroup:
    """Omega(W) embedded in the full model: the symmetric-square image of SL2.

    The kernel {I, -I} halves the order, so the result has q(q^2 - 1)/2
    elements, all fixing U pointwise.
    """
    F = model.field
    sl2 = special_linear_group(F)
    disc = QuadraticSpace(F, discriminant_gram(F))
    T, _ = witt_isometry(model.w_space, disc)
    Tinv = mat_inv(F, T)
    n = model.dim

    def carry(g: GroupElement) -> np.ndarray:
        h = mat_mul(F, mat_mul(F, T, sym_square(F, g)), Tinv)
        return embed_w_block(F, h, n)

    elements = {}
    for g in sl2:
        e = GroupElement(F, carry(g))
        elements.setdefault(e.key, e)
    expected = F.q * (F.q**2 - 1) // 2
    if len(elements) != expected:
        raise GenerationFailure(
            f"Omega(W) closed at {len(elements)}, expected {expected}"
        )
    gens = [GroupElement(F, carry(g)) for g in sl2.generators]
    return GeneratedGroup(F, gens, elements.values())


def tau(model: StandardModel) -> GroupElement:
    """The reflection of W negating z, extended by the identity on U."""
    F = model.field
    M = identity(model.dim)
    M[0, 0] = F.neg(1)
    return GroupElement(F, M)


def group_a(model: StandardModel, b: GeneratedGroup, t: GroupElement) -> GeneratedGroup:
    """The extension <B, tau>, which must close at twice the order of B."""
    group = mulclose(model.field, list(b.generators) + [t], limit=2 * b.order)
    if group.order != 2 * b.order:
        raise GenerationFailure(
            f"<B, tau> closed at {group.order}, expected {2 * b.order}"
        )
    return group


def w_singular_vectors(model: StandardModel) -> np.ndarray:
    """Nonzero singular vectors of W in ascending code order."""
    F = model.field
    space = model.w_space
    vecs = all_vectors(F.q, 3)[1:]
    return vecs[space.kappa_batch(vecs) == 0]


def w_vector_orbits(model: StandardModel, group: GeneratedGroup) -> OrbitPartition:
    """Orbits of the group's W blocks on nonzero singular vectors of W."""
    F = model.field
    vecs = w_singular_vectors(model)
    index = {vecs[i].tobytes(): i for i in range(vecs.shape[0])}
    perms = []
    for g in group.generators:
        img = mat_mul(F, vecs, g.mat[:3, :3])
        try:
            perms.append(np.array([index[row.tobytes()] for row in img]))
        except KeyError as exc:
            raise ActionEscape("image left the singular vectors of W") from exc
    return partition(vecs.shape[0], perms)
