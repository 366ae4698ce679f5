import numpy as np
import pytest

from quadvar.group import GSubset, VectorSpaceCtx
from quadvar.fourier import (RealTable, balanced_indicator, convolve, fourier,
                             indicator, inverse_fourier, iterated_convolution,
                             restricted_fourier_max, spectral_max, u2_norm,
                             u3_norm)
from quadvar.counting import pair_count_table, quadruple_count
from quadvar.linalg import Subspace

from oracles import (add_idx, brute_convolve, brute_fourier,
                     brute_iterated_conv, brute_u2, brute_u3, sub_idx)

TOL = 1e-9


@pytest.fixture
def ctx32():
    return VectorSpaceCtx(3, 2)


def _rand_table(ctx, rng):
    return RealTable(ctx, rng.standard_normal(ctx.size))


def test_fourier_constant(ctx32):
    f = RealTable(ctx32, np.full(9, 0.7))
    fh = fourier(f).values
    assert abs(fh[0] - 0.7) < TOL
    assert np.abs(fh[1:]).max() < TOL


def test_fourier_subspace_indicator_vs_brute(ctx32):
    H = GSubset.from_indices(ctx32, [0, 1, 2])  # <e1>
    fh = fourier(indicator(H)).values
    brute = brute_fourier(H.membership.astype(float), 3, 2)
    assert np.abs(fh - brute).max() < TOL
    # (|H|/|G|) 1_{H^perp}: H^perp = <e2> = indices {0, 3, 6}
    expect = np.zeros(9, dtype=complex)
    expect[[0, 3, 6]] = 1 / 3
    assert np.abs(fh - expect).max() < TOL


def test_inversion_random(ctx32):
    rng = np.random.default_rng(0)
    for _ in range(100):
        f = _rand_table(ctx32, rng)
        back = inverse_fourier(fourier(f))
        assert np.abs(back.values - f.values).max() < TOL


def test_parseval_random():
    rng = np.random.default_rng(1)
    ctx = VectorSpaceCtx(3, 3)
    for _ in range(50):
        f = _rand_table(ctx, rng)
        fh = fourier(f).values
        assert abs(np.sum(np.abs(fh) ** 2) - np.mean(f.values ** 2)) < TOL


def test_convolve_full_group(ctx32):
    one = indicator(GSubset.full(ctx32))
    cv = convolve(one, one)
    assert np.abs(cv.values - 1).max() < TOL


def test_convolve_subspace_vs_brute(ctx32):
    H = GSubset.from_indices(ctx32, [0, 1, 2])
    f = indicator(H)
    cv = convolve(f, f).values
    brute = brute_convolve(f.values, f.values, 3, 2)
    assert np.abs(cv - brute).max() < TOL
    expect = (1 / 3) * H.membership
    assert np.abs(cv - expect).max() < TOL


def test_convolution_theorem():
    rng = np.random.default_rng(2)
    ctx = VectorSpaceCtx(3, 3)
    for _ in range(20):
        f, g = _rand_table(ctx, rng), _rand_table(ctx, rng)
        lhs = fourier(convolve(f, g)).values
        rhs = fourier(f).values * np.conj(fourier(g).values)
        assert np.abs(lhs - rhs).max() < TOL


def test_convolution_intersection_identity():
    """|G| (1_{V cap V-a} * 1_{V cap V-a})(b) equals the exact four-fold
    intersection count."""
    ctx = VectorSpaceCtx(3, 2)
    rng = np.random.default_rng(3)
    V = GSubset(ctx, (rng.random(9) < 0.6).astype(np.uint8))
    for a in range(9):
        N = pair_count_table(V, a)
        for b in range(9):
            direct = sum(
                1 for x in range(9)
                if V.membership[x] and V.membership[add_idx(3, 2, x, a)]
                and V.membership[add_idx(3, 2, x, b)]
                and V.membership[add_idx(3, 2, add_idx(3, 2, x, a), b)])
            assert N[b] == direct


def test_duality_identity_exact():
    """(1_{V∩V-a} * 1_{V∩V-a})(b) = (1_{V∩V-b} * 1_{V∩V-b})(a) exactly."""
    ctx = VectorSpaceCtx(3, 3)
    rng = np.random.default_rng(4)
    V = GSubset(ctx, (rng.random(27) < 0.5).astype(np.uint8))
    tables = np.stack([pair_count_table(V, a) for a in range(27)])
    assert np.array_equal(tables, tables.T)


def test_iterated_convolution_constant(ctx32):
    one = RealTable(ctx32, np.ones(9))
    for order in (2, 4, 8):
        assert np.abs(iterated_convolution(one, order).values - 1).max() < TOL


def test_iterated_convolution_order2_matches_convolve(ctx32):
    rng = np.random.default_rng(5)
    f = _rand_table(ctx32, rng)
    it2 = iterated_convolution(f, 2).values
    cv = convolve(f, f).values
    # conv2(f)(a) = E_x f(x) f(x - a) = (f * f)(-a)
    neg = np.array([sub_idx(3, 2, 0, a) for a in range(9)])
    assert np.abs(it2 - cv[neg]).max() < TOL


def test_iterated_convolution_literal_definition():
    ctx = VectorSpaceCtx(3, 2)
    rng = np.random.default_rng(6)
    f = _rand_table(ctx, rng)
    lit = brute_iterated_conv(f.values, 4, 3, 2)
    assert np.abs(iterated_convolution(f, 4).values - lit).max() < 1e-8
    ctx1 = VectorSpaceCtx(3, 1)
    g = _rand_table(ctx1, rng)
    lit8 = brute_iterated_conv(g.values, 8, 3, 1)
    assert np.abs(iterated_convolution(g, 8).values - lit8).max() < 1e-7


def test_iterated_convolution_subspace_order8(ctx32):
    H = GSubset.from_indices(ctx32, [0, 1, 2])
    it8 = iterated_convolution(indicator(H), 8).values
    expect = (1 / 3) ** 7 * H.membership
    assert np.abs(it8 - expect).max() < TOL


def test_iterated_convolution_composition_chain():
    """conv8(f) = ((f*f)*(f*f)) * ((f*f)*(f*f)) at |G| = 81."""
    ctx = VectorSpaceCtx(3, 4)
    rng = np.random.default_rng(7)
    V = GSubset(ctx, (rng.random(81) < 0.5).astype(np.uint8))
    f = indicator(V)
    h1 = convolve(f, f)
    h2 = convolve(h1, h1)
    h3 = convolve(h2, h2)
    assert np.abs(iterated_convolution(f, 8).values - h3.values).max() < TOL


def test_iterated_convolution_order_errors(ctx32):
    f = RealTable(ctx32, np.ones(9))
    with pytest.raises(ValueError):
        iterated_convolution(f, 3)
    with pytest.raises(ValueError):
        iterated_convolution(f, 0)


def test_u2_constant(ctx32):
    f = RealTable(ctx32, np.full(9, 0.4))
    assert abs(u2_norm(f) - 0.4) < TOL
    assert abs(u3_norm(f) - 0.4) < TOL


def test_u2_balanced_subspace_closed_form():
    """||1_H - delta||_U2 = ((p^d - 1) delta^4)^(1/4) for codim-d H."""
    ctx = VectorSpaceCtx(3, 3)
    H = GSubset.from_indices(
        ctx, Subspace(ctx, [[1, 0, 0], [0, 1, 0]]).element_indices())
    f = balanced_indicator(H)
    expect = (2 * (1 / 3) ** 4) ** 0.25
    assert abs(u2_norm(f) - expect) < TOL
    assert abs(brute_u2(f.values, 3, 3) - expect) < 1e-7


def test_u2_u3_match_brute(ctx32):
    rng = np.random.default_rng(8)
    f = _rand_table(ctx32, rng)
    assert abs(u2_norm(f) - brute_u2(f.values, 3, 2)) < 1e-7
    vals = np.abs(f.values)  # U^3 eighth power is only guaranteed nonneg.
    g = RealTable(ctx32, vals)
    assert abs(u3_norm(g) - brute_u3(vals, 3, 2)) < 1e-7


def test_u2_le_u3_random():
    rng = np.random.default_rng(9)
    ctx = VectorSpaceCtx(3, 3)
    for _ in range(100):
        f = _rand_table(ctx, rng)
        assert u2_norm(f) <= u3_norm(f) + 1e-9


def test_quadruple_spectral_identity_exact():
    """quadruple census = |G|^3 sum |1_A^|^4, exactly after rounding."""
    rng = np.random.default_rng(10)
    for n in (2, 3, 4, 5):
        ctx = VectorSpaceCtx(3, n)
        V = GSubset(ctx, (rng.random(ctx.size) < 0.5).astype(np.uint8))
        fh = fourier(indicator(V)).values
        spectral = ctx.size ** 3 * float(np.sum(np.abs(fh) ** 4))
        assert abs(spectral - round(spectral)) < 1e-5
        assert quadruple_count(V) == round(spectral)


def test_restricted_fourier_max_examples():
    ctx = VectorSpaceCtx(3, 3)
    K = Subspace(ctx, [[1, 0, 0], [0, 1, 0]])
    assert restricted_fourier_max(GSubset.full(ctx), K, [0, 0, 0]) < TOL
    coset = GSubset.from_indices(ctx, K.coset_indices([0, 0, 1]))
    assert restricted_fourier_max(coset, K, [0, 0, 1]) < TOL
    rng = np.random.default_rng(11)
    A = GSubset(ctx, (rng.random(27) < 0.5).astype(np.uint8))
    full = restricted_fourier_max(A, Subspace.full(ctx), [0, 0, 0])
    assert abs(full - spectral_max(A)) < TOL
