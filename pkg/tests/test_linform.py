import itertools

import numpy as np
import pytest

from hemisystems.gf import field_make
from hemisystems import linform as lf
from hemisystems.linform import (
    BadRank,
    DegenerateRestriction,
    QuadraticSpace,
    Subspace,
    all_vectors,
    classify_type,
    mat_det,
    mat_inv,
    mat_mul,
    nullspace,
    rref,
    rref_batch,
    standard_model,
    witt_index,
)


def naive_mat_mul(F, A, B):
    m, n = A.shape
    n2, r = B.shape
    out = np.zeros((m, r), dtype=np.uint8)
    for i in range(m):
        for j in range(r):
            s = 0
            for t in range(n):
                s = F.add(s, F.mul(int(A[i, t]), int(B[t, j])))
            out[i, j] = s
    return out


# ---------------------------------------------------------------------------
# matrix arithmetic


@pytest.mark.parametrize("p,k", [(3, 1), (7, 1), (3, 2)])
def test_mat_mul_against_naive(p, k):
    F = field_make(p, k)
    rng = np.random.default_rng(1)
    for _ in range(25):
        m, n, r = rng.integers(1, 6, size=3)
        A = rng.integers(0, F.q, size=(m, n)).astype(np.uint8)
        B = rng.integers(0, F.q, size=(n, r)).astype(np.uint8)
        assert (mat_mul(F, A, B) == naive_mat_mul(F, A, B)).all()


@pytest.mark.parametrize("p,k", [(3, 1), (5, 1), (3, 2)])
def test_mat_inv_and_det(p, k):
    F = field_make(p, k)
    rng = np.random.default_rng(2)
    n = 4
    found = 0
    while found < 20:
        A = rng.integers(0, F.q, size=(n, n)).astype(np.uint8)
        if mat_det(F, A) == 0:
            continue
        found += 1
        Ainv = mat_inv(F, A)
        assert (mat_mul(F, A, Ainv) == lf.identity(n)).all()
        assert (mat_mul(F, Ainv, A) == lf.identity(n)).all()
    singular = np.zeros((2, 2), dtype=np.uint8)
    singular[0, 0] = 1
    singular[1, 0] = 1
    assert mat_det(F, singular) == 0
    with pytest.raises(ValueError):
        mat_inv(F, singular)


def test_det_multiplicative():
    F = field_make(5)
    rng = np.random.default_rng(3)
    for _ in range(30):
        A = rng.integers(0, 5, size=(3, 3)).astype(np.uint8)
        B = rng.integers(0, 5, size=(3, 3)).astype(np.uint8)
        assert mat_det(F, mat_mul(F, A, B)) == F.mul(mat_det(F, A), mat_det(F, B))


# ---------------------------------------------------------------------------
# rref


def row_span(F, A):
    combos = all_vectors(F.q, A.shape[0])
    return {bytes(v) for v in mat_mul(F, combos, A)}


@pytest.mark.parametrize("p,k", [(3, 1), (3, 2)])
def test_rref_canonical(p, k):
    F = field_make(p, k)
    rng = np.random.default_rng(4)
    for _ in range(60):
        m, n = int(rng.integers(1, 4)), int(rng.integers(2, 6))
        A = rng.integers(0, F.q, size=(m, n)).astype(np.uint8)
        R, piv = rref(F, A)
        assert row_span(F, A) == row_span(F, R)
        R2, piv2 = rref(F, R)
        assert (R2 == R).all() and piv2 == piv
        # an invertible recombination of the rows gives the same canonical form
        while True:
            T = rng.integers(0, F.q, size=(m, m)).astype(np.uint8)
            if mat_det(F, T) != 0:
                break
        R3, _ = rref(F, mat_mul(F, T, A))
        assert (R3 == R).all()
        for r, c in enumerate(piv):
            col = R[:, c]
            assert col[r] == 1 and (np.delete(col, r) == 0).all()


def test_rref_drops_dependent_rows():
    F = field_make(3)
    A = np.array([[0, 1, 1, 0, 0], [0, 2, 2, 0, 0]], dtype=np.uint8)
    R, piv = rref(F, A)
    assert R.shape == (1, 5) and piv == (1,)
    assert (R[0] == [0, 1, 1, 0, 0]).all()


@pytest.mark.parametrize("p,k", [(3, 1), (3, 2)])
def test_rref_batch_matches_single(p, k):
    F = field_make(p, k)
    rng = np.random.default_rng(5)
    mats = rng.integers(0, F.q, size=(300, 3, 7)).astype(np.uint8)
    out, ranks = rref_batch(F, mats)
    for i in range(mats.shape[0]):
        R, piv = rref(F, mats[i])
        r = len(piv)
        assert ranks[i] == r
        assert (out[i, :r] == R).all()
        assert not out[i, r:].any()


def test_nullspace():
    F = field_make(3, 2)
    rng = np.random.default_rng(6)
    for _ in range(30):
        A = rng.integers(0, F.q, size=(3, 6)).astype(np.uint8)
        N = nullspace(F, A)
        R, piv = rref(F, A)
        assert N.shape[0] == 6 - len(piv)
        if N.shape[0]:
            assert not mat_mul(F, A, N.T).any()


# ---------------------------------------------------------------------------
# subspaces


def test_subspace_identity():
    F = field_make(3)
    a = Subspace(F, [[1, 2, 0], [0, 0, 1]])
    b = Subspace(F, [[2, 1, 1], [1, 2, 1]])  # same span, different basis
    assert a == b and hash(a) == hash(b)
    c = Subspace(F, [[1, 0, 0]])
    assert a != c
    assert a.contains_vector(F, [2, 1, 2])
    assert not a.contains_vector(F, [1, 0, 0])


# ---------------------------------------------------------------------------
# quadratic spaces and the standard model


def test_space_rejects_bad_gram():
    F = field_make(3)
    with pytest.raises(ValueError):
        QuadraticSpace(F, [[0, 1], [2, 0]])  # not symmetric
    with pytest.raises(ValueError):
        QuadraticSpace(F, [[1, 1], [1, 1]])  # singular


def test_standard_model_gram_3_2():
    F = field_make(3)
    M = standard_model(F, 2)
    assert M.nu == 2
    expected = np.array(
        [
            [1, 0, 0, 0, 0],
            [0, 0, 1, 0, 0],
            [0, 1, 0, 0, 0],
            [0, 0, 0, 1, 0],
            [0, 0, 0, 0, 1],  # -nu = -2 = 1 mod 3
        ],
        dtype=np.uint8,
    )
    assert (M.space.gram == expected).all()
    assert M.basis_names == ("z", "e0", "f0", "x", "y")
    with pytest.raises(BadRank):
        standard_model(F, 1)


@pytest.mark.parametrize("p,k,d", [(3, 1, 2), (5, 1, 2), (7, 1, 2), (3, 2, 2), (3, 1, 3), (3, 1, 4)])
def test_standard_model_form_values(p, k, d):
    F = field_make(p, k)
    M = standard_model(F, d)
    sp = M.space
    z = M.basis_vector(0)
    assert sp.kappa(z) == F.inv(F.add(1, 1))
    assert sp.beta(z, z) == 1
    e0, f0 = M.basis_vector(1), M.basis_vector(2)
    assert sp.beta(e0, f0) == 1
    assert sp.kappa(e0) == 0 and sp.kappa(f0) == 0
    for i in range(1, d - 1):
        e, f = M.basis_vector(3 + 2 * i), M.basis_vector(4 + 2 * i)
        assert sp.beta(e, f) == 1
        assert sp.kappa(e) == 0 and sp.kappa(f) == 0
    assert mat_det(F, sp.gram) != 0


def test_polarization_exhaustive_3_2():
    # beta(u, v) = kappa(u + v) - kappa(u) - kappa(v) over every pair
    F = field_make(3)
    sp = standard_model(F, 2).space
    vecs = all_vectors(3, 5)
    kap = sp.kappa_batch(vecs)
    for ui, u in enumerate(vecs):
        lhs = sp.kappa_batch(F.add_table[u[None, :], vecs])
        bu = lf.vec_mat(F, u, sp.gram)
        bet = mat_mul(F, vecs, bu.reshape(-1, 1))[:, 0]
        rhs = F.add_table[F.add_table[kap, int(kap[ui])], bet]
        assert (lhs == rhs).all()


def test_kappa_scales_by_squares():
    F = field_make(5)
    sp = standard_model(F, 2).space
    rng = np.random.default_rng(7)
    for _ in range(40):
        v = rng.integers(0, 5, size=5).astype(np.uint8)
        lam = int(rng.integers(0, 5))
        scaled = F.mul_table[lam, v]
        assert sp.kappa(scaled) == F.mul(F.mul(lam, lam), sp.kappa(v))


def test_perp():
    F = field_make(3)
    M = standard_model(F, 2)
    sp = M.space
    assert sp.perp(M.w_subspace) == M.u_subspace
    assert sp.perp(M.u_subspace) == M.w_subspace
    rng = np.random.default_rng(8)
    for _ in range(40):
        rows = rng.integers(0, 3, size=(2, 5)).astype(np.uint8)
        S = Subspace(F, rows)
        if S.dim == 0:
            continue
        P = sp.perp(S)
        assert P.dim == 5 - S.dim
        assert sp.perp(P) == S  # double perp


# ---------------------------------------------------------------------------
# Witt indices, with an independent exhaustive oracle


def oracle_max_ts_dim(space, basis):
    """Largest dimension of a totally singular subspace, by exhaustive search
    over sets of pairwise orthogonal singular points inside the span."""
    F = space.field
    combos = all_vectors(F.q, basis.shape[0])[1:]
    vecs = mat_mul(F, combos, basis)
    pts = {}
    for v in vecs:
        if space.kappa(v) == 0:
            lead = int(np.argmax(v != 0))
            nv = F.mul_table[F.inv(int(v[lead])), v]
            pts[bytes(nv)] = nv
    pts = list(pts.values())
    orth = {
        (i, j)
        for i, j in itertools.combinations(range(len(pts)), 2)
        if space.beta(pts[i], pts[j]) == 0
    }
    best = 0

    def extend(chosen, start):
        nonlocal best
        if chosen:
            stack = np.stack([pts[i] for i in chosen])
            r = len(rref(F, stack)[1])
            best = max(best, r)
        for nxt in range(start, len(pts)):
            if all(((min(i, nxt), max(i, nxt)) in orth) for i in chosen):
                extend(chosen + [nxt], nxt + 1)

    extend([], 0)
    return best


@pytest.mark.parametrize("p", [3, 5])
def test_witt_index_against_oracle(p):
    F = field_make(p)
    M = standard_model(F, 2)
    sp = M.space
    full = Subspace(F, lf.identity(5), reduced=True)
    assert witt_index(sp) == 2
    assert oracle_max_ts_dim(sp, full.basis) == 2
    assert witt_index(sp, M.w_subspace) == 1
    assert oracle_max_ts_dim(sp, M.w_subspace.basis) == 1
    assert witt_index(sp, M.u_subspace) == 0
    assert oracle_max_ts_dim(sp, M.u_subspace.basis) == 0


@pytest.mark.parametrize("p,k,d", [(3, 1, 2), (5, 1, 2), (7, 1, 2), (9, 0, 2), (3, 1, 3), (3, 1, 4)])
def test_witt_index_blocks(p, k, d):
    F = field_make(3, 2) if k == 0 else field_make(p, k)
    M = standard_model(F, d)
    assert witt_index(M.space) == d
    assert classify_type(M.space) == "parabolic"
    assert witt_index(M.w_space) == 1
    assert classify_type(M.w_space) == "parabolic"
    assert witt_index(M.u_space) == d - 2
    assert classify_type(M.u_space) == "elliptic"
    hyp = QuadraticSpace(F, np.array([[0, 1], [1, 0]], dtype=np.uint8))
    assert witt_index(hyp) == 1
    assert classify_type(hyp) == "hyperbolic"


def test_degenerate_restriction():
    F = field_make(3)
    M = standard_model(F, 2)
    e0 = Subspace(F, M.basis_vector(1).reshape(1, -1))
    with pytest.raises(DegenerateRestriction):
        witt_index(M.space, e0)


# ---------------------------------------------------------------------------
# serialization


def test_matrix_serialization_roundtrip():
    for p, k in [(3, 1), (3, 2)]:
        F = field_make(p, k)
        rng = np.random.default_rng(9)
        A = rng.integers(0, F.q, size=(3, 5)).astype(np.uint8)
        s = lf.format_matrix(F, A)
        assert (lf.parse_matrix(F, s) == A).all()
