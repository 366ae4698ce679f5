from fractions import Fraction

import numpy as np
import pytest

from quadvar.group import GSubset, VectorSpaceCtx
from quadvar.counting import (claim_translate_statistic, config10_count,
                              config10_count_naive, cube_completion_probability,
                              cube_count, cube_count_naive, pattern_census,
                              popular_difference_set, quadruple_count,
                              quadruple_count_naive, regularity_classify,
                              seven_point_count)
from quadvar.fourier import balanced_indicator, u2_norm
from quadvar.generators import gen_layer_variety, gen_sidon_counterexample, \
    random_symmetric_bilinear
from quadvar.linalg import Subspace

from oracles import brute_config10, brute_cubes, brute_quadruples


@pytest.fixture
def ctx32():
    return VectorSpaceCtx(3, 2)


def _random_set(ctx, density, seed):
    rng = np.random.default_rng(seed)
    return GSubset(ctx, (rng.random(ctx.size) < density).astype(np.uint8))


def test_quadruple_examples(ctx32):
    G = GSubset.full(ctx32)
    assert quadruple_count(G) == 9 ** 3
    H = GSubset.from_indices(ctx32, [0, 1, 2])
    assert quadruple_count(H) == 3 ** 3
    par = GSubset.from_indices(
        ctx32, [int(ctx32.coords_to_index([t, (t * t) % 3])) for t in range(3)])
    assert quadruple_count(par) == 15  # 2|A|^2 - |A|: trivial quadruples only


def test_quadruple_fast_vs_naive_vs_brute(ctx32):
    for seed in range(5):
        V = _random_set(ctx32, 0.5, seed)
        fast = quadruple_count(V)
        assert fast == quadruple_count_naive(V)
        assert fast == brute_quadruples(V.indices(), 3, 2)


def test_cube_examples(ctx32):
    G = GSubset.full(ctx32)
    assert cube_count(G) == 9 ** 4
    H = GSubset.from_indices(ctx32, [0, 1, 2])
    assert cube_count(H) == 3 ** 4
    assert cube_completion_probability(G) == 1


def test_cube_fast_vs_naive_vs_brute(ctx32):
    for seed in range(4):
        V = _random_set(ctx32, 0.55, seed + 10)
        fast = cube_count(V)
        assert fast == cube_count_naive(V)
        assert fast == brute_cubes(V.membership, 3, 2)


def test_seven_point_count_brute(ctx32):
    """Seven-point configurations by direct enumeration."""
    from oracles import add_idx
    V = _random_set(ctx32, 0.6, 3)
    memb = V.membership
    direct = 0
    for x in range(9):
        for a in range(9):
            for b in range(9):
                for c in range(9):
                    pts = [x, add_idx(3, 2, x, a), add_idx(3, 2, x, b),
                           add_idx(3, 2, x, c)]
                    ab = add_idx(3, 2, pts[1], b)
                    ac = add_idx(3, 2, pts[1], c)
                    bc = add_idx(3, 2, pts[2], c)
                    if all(memb[t] for t in pts + [ab, ac, bc]):
                        direct += 1
    assert seven_point_count(V) == direct


def test_sidon_sum_completion_exactly_one():
    ctx = VectorSpaceCtx(3, 3)
    inst = gen_sidon_counterexample(ctx, 1)
    assert cube_completion_probability(inst.subset) == 1


def test_config10_examples():
    ctx = VectorSpaceCtx(3, 2)
    assert config10_count(GSubset.full(ctx)) == 9 ** 6
    ctx3 = VectorSpaceCtx(3, 3)
    H = GSubset.from_indices(
        ctx3, Subspace(ctx3, [[1, 0, 0], [0, 1, 0]]).element_indices())
    assert config10_count(H) == 9 ** 6  # |H|^6: closed under the pattern


def test_config10_fast_vs_naive_vs_brute(ctx32):
    for seed in range(3):
        V = _random_set(ctx32, 0.6, seed + 20)
        fast = config10_count(V)
        assert fast == config10_count_naive(V)
        assert fast == brute_config10(V.membership, 3, 2)


def test_config10_density_bound():
    """count >= c^32 |G|^6 for density c >= 1/3 (exact rational compare)."""
    ctx = VectorSpaceCtx(3, 3)
    for seed in range(5):
        V = _random_set(ctx, 0.5, seed + 30)
        if Fraction(len(V), 27) < Fraction(1, 3):
            continue
        assert config10_count(V) * 27 ** 26 >= len(V) ** 32


def test_pattern_census_validate(ctx32):
    V = _random_set(ctx32, 0.5, 40)
    census = pattern_census(V, with_config10=True)
    assert census.validate(V)
    assert census.quadruples >= len(V) ** 2
    assert census.cubes >= len(V)


def test_popular_difference_examples(ctx32):
    G = GSubset.full(ctx32)
    assert popular_difference_set(G, 1, 0.5) == G
    H = GSubset.from_indices(ctx32, [0, 1, 2])
    delta_h = float(H.density)
    got = popular_difference_set(H, 1, delta_h ** 2 / 2)
    assert got == H
    empty = GSubset.empty(ctx32)
    assert len(popular_difference_set(empty, 0, 0.01)) == 0
    with pytest.raises(ValueError):
        popular_difference_set(G, 0, 0.0)


def test_regularity_full_group():
    ctx = VectorSpaceCtx(3, 3)
    rep = regularity_classify(GSubset.full(ctx), 0.1)
    assert rep.regular_count == ctx.size
    assert rep.pattern_method == "exact"


def test_regularity_empty_set():
    ctx = VectorSpaceCtx(3, 2)
    rep = regularity_classify(GSubset.empty(ctx), 0.1)
    assert rep.regular_count == 0
    assert not rep.cond_translate.any()


def test_regularity_layer_variety_mostly_regular():
    ctx = VectorSpaceCtx(3, 4)
    gamma = random_symmetric_bilinear(ctx, 1, seed=5)
    lam0 = Subspace(VectorSpaceCtx(3, 1), np.zeros((0, 1), dtype=int))
    V = gen_layer_variety(ctx, gamma, lam0)
    rep = regularity_classify(V, 0.1)
    assert rep.regular_count >= 0.9 * ctx.size


def test_regularity_exact_vs_monte_carlo():
    ctx = VectorSpaceCtx(3, 3)
    V = _random_set(ctx, 0.5, 50)
    exact = regularity_classify(V, 0.15)
    mc = regularity_classify(V, 0.15, exact_budget=0, pattern_samples=4000, seed=1)
    assert exact.pattern_method == "exact"
    assert mc.pattern_method == "monte-carlo"
    assert np.array_equal(exact.cond_translate, mc.cond_translate)
    assert np.array_equal(exact.cond_fourfold, mc.cond_fourfold)
    # the sampled condition agrees wherever the estimate is confident
    confident = mc.pattern_confident
    assert np.all(exact.cond_pattern[confident] == mc.cond_pattern[confident])


def test_completion_errors(ctx32):
    with pytest.raises(ValueError):
        cube_completion_probability(GSubset.empty(ctx32))


def test_config10_subspace_census_ground_truth():
    """On an exact instance most counted configurations clear the ten-fold
    intersection threshold; skipped points are reported."""
    from quadvar.recovery import RecoveryConfig, step1_build_family
    from quadvar.counting import config10_subspace_census
    ctx = VectorSpaceCtx(3, 5)
    gamma = random_symmetric_bilinear(ctx, 1, seed=13)
    lam0 = Subspace(VectorSpaceCtx(3, 1), np.zeros((0, 1), dtype=int))
    V = gen_layer_variety(ctx, gamma, lam0)
    fam = step1_build_family(V, config=RecoveryConfig(seed=1))
    A = GSubset.from_indices(ctx, fam.members)
    # six independent popular elements pin the intersection to codim <= 6
    census = config10_subspace_census(A, fam, threshold=3 ** -6,
                                      samples=400, seed=2)
    assert census.in_set > 0
    assert census.hits >= 0.9 * (census.in_set - census.skipped)
    # an impossible threshold gives no hits
    none = config10_subspace_census(A, fam, threshold=1.0, samples=200, seed=3)
    assert none.hits == 0


def test_claim_translate_statistic_bound():
    """Translate-intersection variance within the uniformity-driven bound."""
    ctx = VectorSpaceCtx(3, 5)
    gamma = random_symmetric_bilinear(ctx, 1, seed=9)
    lam0 = Subspace(VectorSpaceCtx(3, 1), np.zeros((0, 1), dtype=int))
    V = gen_layer_variety(ctx, gamma, lam0)
    eps = u2_norm(balanced_indicator(V))
    for r in (1, 2, 3):
        stat = claim_translate_statistic(V, r, samples=300, seed=r)
        assert stat <= 4 * (r + 1) * eps
        # the generated quasirandom instances meet the stronger measured form
        assert stat <= 4 * (r + 1) * eps ** 4
