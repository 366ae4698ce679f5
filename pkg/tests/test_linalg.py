import itertools

import numpy as np
import pytest

from quadvar.group import VectorSpaceCtx
from quadvar.linalg import (LinearMap, PreconditionError, Subspace, log_p_ceil,
                            nullspace, quadruple_isomorphisms, rank,
                            repair_to_isomorphism, uniqueness_defect_bound_check)

from oracles import subspace_elements


@pytest.fixture
def ctx32():
    return VectorSpaceCtx(3, 2)


@pytest.fixture
def ctx33():
    return VectorSpaceCtx(3, 3)


def test_subspace_ops_examples(ctx32):
    e1 = Subspace(ctx32, [[1, 0]])
    e2 = Subspace(ctx32, [[0, 1]])
    assert e1.intersect(e2).dim == 0
    assert (e1 + e2) == Subspace.full(ctx32)
    diag = Subspace(ctx32, [[1, 1]])
    assert np.array_equal(diag.orthogonal_complement().basis, [[1, 2]])


def test_subspace_dim_formula_and_double_complement(ctx33):
    rng = np.random.default_rng(0)
    for _ in range(50):
        A = Subspace(ctx33, rng.integers(0, 3, size=(rng.integers(0, 4), 3)))
        B = Subspace(ctx33, rng.integers(0, 3, size=(rng.integers(0, 4), 3)))
        assert A.intersect(B).dim + (A + B).dim == A.dim + B.dim
        assert A.orthogonal_complement().orthogonal_complement() == A


def test_subspace_ops_match_set_oracle(ctx33):
    rng = np.random.default_rng(1)
    for _ in range(25):
        b1 = rng.integers(0, 3, size=(2, 3))
        b2 = rng.integers(0, 3, size=(2, 3))
        A, B = Subspace(ctx33, b1), Subspace(ctx33, b2)
        ea = set(subspace_elements(b1, 3, 3))
        eb = set(subspace_elements(b2, 3, 3))
        assert set(A.intersect(B).element_indices().tolist()) == (ea & eb)
        assert set((A + B).element_indices().tolist()) == \
            set(subspace_elements(np.concatenate([b1, b2]), 3, 3))


def test_echelon_canonicalization(ctx33):
    """Different generating sets of the same space give the same basis."""
    rng = np.random.default_rng(2)
    base = rng.integers(0, 3, size=(2, 3))
    S = Subspace(ctx33, base)
    mixed = (np.array([[1, 1], [2, 1]]) @ base) % 3  # invertible recombination
    assert Subspace(ctx33, mixed) == S


def test_coset_enumerate(ctx33):
    S = Subspace(ctx33, [[1, 0, 0]])
    cos = S.coset_indices([0, 1, 0])
    assert len(cos) == 3
    assert sorted(cos) == sorted(int(ctx33.coords_to_index([t, 1, 0]))
                                 for t in range(3))


def test_context_mismatch():
    A = Subspace(VectorSpaceCtx(3, 2), [[1, 0]])
    B = Subspace(VectorSpaceCtx(3, 3), [[1, 0, 0]])
    with pytest.raises(ValueError):
        A.intersect(B)


def test_repair_invertible_fixed_point():
    phi = LinearMap(3, [[1, 2], [0, 1]])
    psi = repair_to_isomorphism(phi)
    assert np.array_equal(psi.matrix, phi.matrix)


def test_repair_zero_map():
    phi = LinearMap(3, np.zeros((2, 2), dtype=int))
    psi = repair_to_isomorphism(phi)
    assert psi.rank() == 2
    assert (phi - psi).rank() == 2


def test_repair_diag_example_exhaustive():
    """diag(1, 0) over F_3: the minimum defect over all 48 invertible 2x2
    matrices is 1, and the construction attains it."""
    phi = LinearMap(3, [[1, 0], [0, 0]])
    best = 9
    invertibles = 0
    for entries in itertools.product(range(3), repeat=4):
        M = np.array(entries).reshape(2, 2)
        if rank(M, 3) == 2:
            invertibles += 1
            best = min(best, rank((M - phi.matrix) % 3, 3))
    assert invertibles == 48
    assert best == 1
    psi = repair_to_isomorphism(phi)
    assert psi.rank() == 2 and (phi - psi).rank() == 1


def test_repair_defect_equals_nullity_random():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        d = int(rng.integers(1, 5))
        p = int(rng.choice([3, 5]))
        phi = LinearMap(p, rng.integers(0, p, size=(d, d)))
        psi = repair_to_isomorphism(phi)
        assert psi.rank() == d
        assert (phi - psi).rank() == d - phi.rank()


def test_quadruple_isos_axes_example():
    """U_i = <e_i>, U_4 = <e1+e2+e3>: an exact quadruple exists for every
    choice of the given isomorphism, and the construction finds defect 0."""
    ctx = VectorSpaceCtx(3, 3)
    U1 = Subspace(ctx, [[1, 0, 0]])
    U2 = Subspace(ctx, [[0, 1, 0]])
    U3 = Subspace(ctx, [[0, 0, 1]])
    U4 = Subspace(ctx, [[1, 1, 1]])
    for c4 in (1, 2):
        phi4 = LinearMap(3, (c4 * np.ones((3, 1), dtype=int)))
        # independent existence oracle: search scalar isomorphisms
        found = False
        for c1, c2, c3 in itertools.product((1, 2), repeat=3):
            total = np.zeros((3, 1), dtype=int)
            total[0, 0] = c1
            total[1, 0] = c2
            total[2, 0] = (-c3) % 3
            total = (total - phi4.matrix) % 3
            if rank(total, 3) == 0:
                found = True
        assert found
        res = quadruple_isomorphisms(U1, U2, U3, U4, phi4, 1)
        assert res.defect_rank == 0
        assert res.k_measured == 1
        for phi, U in [(res.phi1, U1), (res.phi2, U2), (res.phi3, U3)]:
            assert Subspace(ctx, phi.matrix.T) == U
            assert phi.rank() == 1


def test_quadruple_isos_identical_subspaces():
    """All four subspaces equal: valid for K = p^2d, defect within bound."""
    ctx = VectorSpaceCtx(3, 3)
    U = Subspace(ctx, [[1, 1, 1]])
    phi4 = LinearMap(3, (2 * np.ones((3, 1), dtype=int)))
    res = quadruple_isomorphisms(U, U, U, U, phi4, 9)
    assert res.defect_rank <= res.defect_bound
    # an exact completion exists: phi1 = phi2 = phi3' with phi3 = phi4 works
    assert rank((phi4.matrix + phi4.matrix - phi4.matrix - phi4.matrix) % 3, 3) == 0


def test_quadruple_isos_precondition_error():
    ctx = VectorSpaceCtx(3, 3)
    U = Subspace(ctx, [[1, 0, 0]])
    phi4 = LinearMap(3, np.array([[1], [0], [0]]))
    with pytest.raises(PreconditionError, match="triple"):
        quadruple_isomorphisms(U, U, U, U, phi4, 1)


def _random_subspace(ctx, dim, rng):
    while True:
        M = rng.integers(0, ctx.p, size=(dim, ctx.n))
        if rank(M, ctx.p) == dim:
            return Subspace(ctx, M)


def test_quadruple_isos_generic_position_bound():
    """Random quadruples at d = 2, n = 8: defect within 20 log_p K of the
    measured K."""
    ctx = VectorSpaceCtx(3, 8)
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 30:
        subs = [_random_subspace(ctx, 2, rng) for _ in range(4)]
        phi4 = LinearMap(3, subs[3].basis.T)
        try:
            res = quadruple_isomorphisms(*subs, phi4, 3 ** 10)
        except PreconditionError:
            continue
        checked += 1
        assert res.defect_rank <= 20 * log_p_ceil(res.k_measured, 3)


def test_quadruple_isos_exact_closure_gives_zero_defect():
    """U4 inside U1 + U2 + U3 with all sums exact: measured K = 1, defect 0."""
    rng = np.random.default_rng(6)
    zeros = 0
    attempts = 0
    while zeros < 25 and attempts < 500:
        attempts += 1
        d = int(rng.integers(1, 3))
        n = 3 * d + int(rng.integers(1, 3))
        ctx = VectorSpaceCtx(3, n)
        U1 = _random_subspace(ctx, d, rng)
        U2 = _random_subspace(ctx, d, rng)
        U3 = _random_subspace(ctx, d, rng)
        S = U1 + U2 + U3
        if S.dim != 3 * d:
            continue
        coeff = rng.integers(0, 3, size=(d, S.dim))
        U4 = Subspace(ctx, (coeff @ S.basis) % 3)
        if U4.dim != d:
            continue
        phi4 = LinearMap(3, U4.basis.T)
        try:
            res = quadruple_isomorphisms(U1, U2, U3, U4, phi4, 1)
        except PreconditionError:
            continue
        assert res.k_measured == 1
        assert res.defect_rank == 0
        zeros += 1
    assert zeros == 25


def test_uniqueness_bound_trivial_and_random():
    ctx = VectorSpaceCtx(3, 3)
    U = Subspace(ctx, [[1, 1, 1]])
    W = Subspace(ctx, [[0, 0, 1]])
    Z = LinearMap(3, np.zeros((3, 1), dtype=int))
    assert uniqueness_defect_bound_check(Z, Z, Z, Z, Z, U, U, U, U, W, 0)

    rng = np.random.default_rng(7)
    for _ in range(200):
        subs, maps = [], []
        for _ in range(5):
            S = _random_subspace(ctx, 1, rng)
            c = int(rng.integers(0, 3))
            maps.append(LinearMap(3, (c * S.basis.T) % 3))
            subs.append(S)
        r = LinearMap(3, sum(m.matrix for m in maps) % 3).rank()
        assert uniqueness_defect_bound_check(*maps, *subs, r)


def test_log_p_ceil():
    from fractions import Fraction
    assert log_p_ceil(1, 3) == 0
    assert log_p_ceil(3, 3) == 1
    assert log_p_ceil(27, 3) == 3
    assert log_p_ceil(Fraction(28), 3) == 4
    assert log_p_ceil(Fraction(1, 2), 3) == 0


def test_nullspace_kernel_property():
    rng = np.random.default_rng(8)
    for _ in range(50):
        p = int(rng.choice([3, 5]))
        M = rng.integers(0, p, size=(3, 5))
        N = nullspace(M, p)
        assert N.shape[0] == 5 - rank(M, p)
        if N.shape[0]:
            assert not ((M @ N.T) % p).any()
