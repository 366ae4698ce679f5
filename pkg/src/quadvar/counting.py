"""Exact censuses of additive patterns: quadruples, cubes, the 10-point
configuration, popular differences, and regularity classification.

Fast paths go through the character transform but recover exact integer
counts: every transform output that represents a count is rounded entry by
entry and checked to sit within 1e-6 of an integer. Naive nested-loop
oracles live in the kernel backends and are exposed as *_naive.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .fourier import _forward_raw, _inverse_raw
from .group import GSubset

INT_TOL = 1e-6

ORACLE_MAX_SIZE = 3 ** 7


def _round_counts(arr) -> np.ndarray:
    r = np.rint(arr)
    err = np.abs(arr - r).max() if arr.size else 0.0
    if err > INT_TOL:
        raise ArithmeticError(f"count table is {err:.2e} away from integers")
    return r.astype(np.int64)


def _pair_membership(V: GSubset, a: int) -> np.ndarray:
    """0/1 table of V ∩ (V - a)."""
    perm = _kernels.shift_perm(V.ctx.p, V.ctx.n, a)
    return (V.membership & V.membership[perm]).astype(np.uint8)


def pair_spectra_scan(V: GSubset, indices, *, chunk: int = 64, threads=None):
    """Yield (index_block, spectra_block) over the given shifts, where
    spectra_block[i] = (1_{V ∩ V-a})^hat (normalized) for a = index_block[i].

    Batches the pair tables and transforms to amortize per-shift overhead;
    this is the shared inner scan of the censuses and of stage 1.
    """
    ctx = V.ctx
    size = ctx.size
    memb = V.membership
    indices = np.asarray(indices, dtype=np.int64)
    for lo in range(0, indices.size, chunk):
        blk = indices[lo:lo + chunk]
        perms = np.empty((blk.size, size), dtype=np.int64)
        for i, a in enumerate(blk):
            perms[i] = _kernels.shift_perm(ctx.p, ctx.n, int(a))
        H = (memb[np.newaxis, :] * memb[perms]).astype(np.complex128)
        _kernels.dft_batch_inplace(H, ctx.p, ctx.n, -1, threads=threads)
        H /= size
        yield blk, H


def _inverse_batch(tables: np.ndarray, ctx, threads=None) -> np.ndarray:
    """Unnormalized inverse transform of each row (real part returned)."""
    block = tables.astype(np.complex128)
    _kernels.dft_batch_inplace(block, ctx.p, ctx.n, +1, threads=threads)
    return block.real


def pair_count_table(V: GSubset, a: int) -> np.ndarray:
    """N_a[b] = |V ∩ (V-a) ∩ (V-b) ∩ (V-a-b)| for every b, exactly."""
    ctx = V.ctx
    h = _pair_membership(V, a).astype(np.float64)
    hh = _forward_raw(h, ctx)
    conv = _inverse_raw((hh * np.conj(hh)).astype(np.complex128), ctx).real
    return _round_counts(conv * ctx.size)


def difference_count_table(A: GSubset) -> np.ndarray:
    """N[d] = |A ∩ (A - d)|, exactly."""
    return pair_count_table(A, 0)


def additive_count_table(A: GSubset) -> np.ndarray:
    """AC[s] = #{(u, v) in A^2 : u + v = s}, exactly."""
    ctx = A.ctx
    ah = _forward_raw(A.membership.astype(np.float64), ctx)
    conv = _inverse_raw((ah * ah).astype(np.complex128), ctx).real
    return _round_counts(conv * ctx.size)


def quadruple_count(A: GSubset) -> int:
    """#{(x, y, z, w) in A^4 : x + y = z + w}, via the difference spectrum."""
    N = difference_count_table(A)
    return int(np.sum(N.astype(object) ** 2))


def quadruple_count_naive(A: GSubset) -> int:
    ctx = A.ctx
    if ctx.size > ORACLE_MAX_SIZE:
        raise ValueError("naive oracle limited to oracle-scale groups")
    return _kernels.quadruple_naive(A.membership, ctx.add_table(), ctx.sub_table())


def cube_count(V: GSubset, threads=None) -> int:
    """#{(x, a, b, c) : all eight cube points lie in V}.

    Grouped by the shift c: each group is an additive-quadruple census of
    V ∩ (V - c), each computed exactly from one transform.
    """
    ctx = V.ctx
    size = ctx.size
    total = 0
    for blk, spectra in pair_spectra_scan(V, np.arange(size), threads=threads):
        power2 = np.abs(spectra) ** 2
        counts = _round_counts(_inverse_batch(power2, ctx, threads) * size)
        total += int(np.einsum("ij,ij->", counts, counts, dtype=np.int64))
    return total


def cube_count_naive(V: GSubset) -> int:
    ctx = V.ctx
    if ctx.size > ORACLE_MAX_SIZE:
        raise ValueError("naive oracle limited to oracle-scale groups")
    return _kernels.cube_naive(V.membership, ctx.add_table(), ctx.sub_table())


def seven_point_count(V: GSubset, threads=None) -> int:
    """#{(x, a, b, c) : the seven cube points other than x+a+b+c lie in V}."""
    ctx = V.ctx
    size = ctx.size
    memb = V.membership
    vhat = _forward_raw(memb.astype(np.float64), ctx)
    total = 0
    for blk, spectra in pair_spectra_scan(V, np.arange(size), threads=threads):
        both = np.concatenate([spectra * spectra, spectra * vhat[np.newaxis, :]])
        _kernels.dft_batch_inplace(both, ctx.p, ctx.n, +1, threads=threads)
        counts = _round_counts(both.real * size)
        addc, cross = counts[: blk.size], counts[blk.size:]
        total += int(np.einsum("ij,ij->", addc, cross, dtype=np.int64))
    return total


def cube_completion_probability(V: GSubset, threads=None) -> Fraction:
    """P(x+a+b+c in V | the other seven cube points lie in V), exactly."""
    if len(V) == 0:
        raise ValueError("completion probability of the empty set")
    sevens = seven_point_count(V, threads=threads)
    if sevens == 0:
        raise ValueError("no seven-point configurations")
    return Fraction(cube_count(V, threads=threads), sevens)


def config10_count(A: GSubset) -> int:
    """#{(b1,b2,b3,x2,y3,z1) : all ten derived points lie in A}, exactly.

    The three free points contribute independent one-dimensional counts for
    each (b1, b2, b3), read from exact difference/additive count tables.
    """
    ctx = A.ctx
    if ctx.size > ORACLE_MAX_SIZE:
        raise ValueError("config10_count supported up to 3^7 points")
    memb = A.membership.astype(bool)
    members = A.indices()
    if members.size == 0:
        return 0
    add = ctx.add_table()
    sub = ctx.sub_table()
    N = difference_count_table(A)
    AC = additive_count_table(A)
    # DX[i, j] = idx(members[j] - members[i]) = b3 - b2 for (b2, b3)
    DX = sub[np.ix_(members, members)].T
    WX = N[DX]
    total = 0
    for b1 in members:
        s12 = add[b1, members]                       # b1 + b2 over b2
        valid = memb[sub[np.ix_(s12, members)]]      # b1 + b2 - b3 in A
        wy = N[sub[b1, members]]                     # over b3
        wz = AC[s12]                                 # over b2
        t = np.einsum("ij,ij,j->i", valid.astype(np.int64), WX, wy)
        total += int(t @ wz)
    return total


def config10_count_naive(A: GSubset) -> int:
    ctx = A.ctx
    if ctx.size > ORACLE_MAX_SIZE:
        raise ValueError("naive oracle limited to oracle-scale groups")
    return _kernels.config10_naive(A.membership, ctx.add_table(), ctx.sub_table())


@dataclass
class Config10SubspaceCensus:
    """Sampled census of 6-tuples whose ten derived points lie in A and whose
    ten-fold subspace intersection clears the size threshold."""

    sampled: int            # 6-tuples drawn
    in_set: int             # all ten points in A
    skipped: int            # some point lacks a subspace in the family
    hits: int               # intersection >= threshold * |G|
    estimated_count: int    # hits scaled to |A-ambient|^6

    @property
    def hit_fraction(self) -> float:
        return self.hits / self.sampled if self.sampled else 0.0


def _ten_points(ctx, b1, b2, b3, x2, y3, z1):
    co = ctx.index_to_coords(np.array([b1, b2, b3, x2, y3, z1], dtype=np.int64))
    derived = np.stack([
        co[0], co[1], co[2], co[0] + co[1] - co[2],
        co[3], co[3] - co[1] + co[2],
        co[4], co[4] + co[0] - co[2],
        co[5], co[0] + co[1] - co[5],
    ]) % ctx.p
    return ctx.coords_to_index(derived)


def config10_subspace_census(A: GSubset, family, threshold: float, *,
                             samples: int = 2000, seed: int = 0) -> Config10SubspaceCensus:
    """Count configurations whose ten-fold W-intersection is large.

    family maps element indices to their subspaces (a SubspaceFamily or a
    plain dict). Tuples with a point outside the family's domain are skipped
    and reported. Sampled: 6-tuples are drawn uniformly from A^6, seeded.
    """
    ctx = A.ctx
    subspaces = getattr(family, "subspaces", family)
    ann_cache = {}

    def annihilator(a):
        if a not in ann_cache:
            ann_cache[a] = subspaces[a].orthogonal_complement().basis
        return ann_cache[a]

    members = A.indices()
    if members.size == 0:
        return Config10SubspaceCensus(0, 0, 0, 0, 0)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    memb = A.membership
    in_set = skipped = hits = 0
    from .linalg import rank as _rank
    for _ in range(samples):
        b1, b2, b3, x2, y3, z1 = (int(v) for v in
                                  rng.choice(members, size=6, replace=True))
        pts = _ten_points(ctx, b1, b2, b3, x2, y3, z1)
        if not memb[pts].all():
            continue
        in_set += 1
        try:
            stacked = np.concatenate([annihilator(int(t)) for t in pts], axis=0)
        except KeyError:
            skipped += 1
            continue
        inter_dim = ctx.n - _rank(stacked, ctx.p)
        if ctx.p ** inter_dim >= threshold * ctx.size:
            hits += 1
    estimated = round(hits / samples * ctx.size ** 6) if samples else 0
    return Config10SubspaceCensus(samples, in_set, skipped, hits, estimated)


@dataclass
class PatternCensus:
    quadruples: int
    cubes: int
    config10: int | None = None

    def validate(self, A: GSubset):
        """Diagonal-solution lower bounds that hold for every set."""
        m = len(A)
        assert self.quadruples >= m * m
        assert self.cubes >= m
        return True


def pattern_census(A: GSubset, with_config10: bool = False, threads=None) -> PatternCensus:
    cfg = config10_count(A) if with_config10 else None
    return PatternCensus(quadruple_count(A), cube_count(A, threads=threads), cfg)


def popular_difference_set(V: GSubset, a: int, tau: float) -> GSubset:
    """{b : (1_{V ∩ V-a} * 1_{V ∩ V-a})(b) >= tau}."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    N = pair_count_table(V, a)
    mask = N >= tau * V.ctx.size - 1e-9
    return GSubset(V.ctx, mask.astype(np.uint8))


@dataclass
class RegularityReport:
    eta: float
    cond_translate: np.ndarray   # (i)  1/2 d^2|G| <= |V ∩ V-a| <= 2 d^2|G|
    cond_fourfold: np.ndarray    # (ii) four-fold bound fails for <= eta|G| of b
    cond_pattern: np.ndarray     # (iii) eight-term bound fails for <= eta|G|^3 triples
    regular_set: GSubset
    pattern_method: str = "exact"
    pattern_confident: np.ndarray | None = None
    pattern_samples: int = 0

    @property
    def regular_count(self) -> int:
        return len(self.regular_set)


def pattern_condition_scan(V: GSubset, eta: float, *, supp_sizes=None,
                           pattern_samples: int = 10_000, exact_budget: float = 2e8,
                           seed: int = 0, threads=None):
    """Regularity condition (iii) for every a at once.

    Exact route: histogram the 4-point counts over supp(1_{V ∩ V-a})^4 per a
    (budget permitting at oracle scale). Monte-Carlo route: by symmetry of
    the 8-point expression in a and the shift triple, one correlation table
    per sampled triple covers all a simultaneously.

    Returns (cond3 bool array, method, confidence array or None, samples).
    """
    ctx = V.ctx
    size = ctx.size
    nv = len(V)
    bound3 = 2.0 * nv ** 5 / float(size) ** 4
    if supp_sizes is None:
        supp_sizes = difference_count_table(V).astype(np.int64)
    exact_ok = (size <= 3 ** 5
                and float(np.sum(supp_sizes.astype(float) ** 4)) <= exact_budget)
    if exact_ok:
        sub = ctx.sub_table()
        viol3 = np.zeros(size, dtype=np.int64)
        for a in range(size):
            supp = np.flatnonzero(_pair_membership(V, a)).astype(np.int64)
            viol3[a] = _kernels.hist4_exceed(supp, sub, size, bound3)
        return viol3 <= eta * size ** 3, "exact", None, 0

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    samples = int(pattern_samples)
    triples = rng.integers(0, size, size=(samples, 3))
    exceed = np.zeros(size, dtype=np.int64)
    memb = V.membership
    chunk = max(1, (1 << 22) // size)
    buf = np.empty((chunk, size), dtype=np.complex128)
    for lo in range(0, samples, chunk):
        hi = min(samples, lo + chunk)
        for i, (u, v, w) in enumerate(triples[lo:hi]):
            pu = _kernels.shift_perm(ctx.p, ctx.n, int(u))
            pv = _kernels.shift_perm(ctx.p, ctx.n, int(v))
            pw = _kernels.shift_perm(ctx.p, ctx.n, int(w))
            buf[i] = _kernels.product_table(memb, pu, pv, pw)
        block = buf[: hi - lo]
        _kernels.dft_batch_inplace(block, ctx.p, ctx.n, -1, threads=threads)
        spec = np.abs(block / size) ** 2
        block[:] = spec
        _kernels.dft_batch_inplace(block, ctx.p, ctx.n, +1, threads=threads)
        counts = np.rint(block.real * size)
        exceed += (counts > bound3).sum(axis=0)
    frac = exceed / samples
    cond3 = frac <= eta
    se = float(np.sqrt(eta * (1 - eta) / samples))
    confident = np.abs(frac - eta) > 2.326 * se
    return cond3, "monte-carlo", confident, samples


def regularity_classify(V: GSubset, eta: float, *, pattern_samples: int = 10_000,
                        exact_budget: float = 2e8, seed: int = 0,
                        threads=None) -> RegularityReport:
    """Classify every a in G against the three regularity conditions.

    Condition (iii) is evaluated by an exact pattern histogram when the
    support-size budget allows, and otherwise by a seeded Monte Carlo over
    shared shift triples (one transform per sampled triple covers all a).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    ctx = V.ctx
    size = ctx.size
    nv = len(V)

    N0 = difference_count_table(V)
    if nv == 0:
        cond1 = np.zeros(size, dtype=bool)  # empty set: no usable pair sets
    else:
        lower = 2 * N0.astype(np.int64) * size >= nv * nv
        upper = N0.astype(np.int64) * size <= 2 * nv * nv
        cond1 = lower & upper

    thr2 = 2 * nv ** 3  # condition (ii) compares N_a[b] * |G|^2 against 2|V|^3
    viol2 = np.zeros(size, dtype=np.int64)
    supp_sizes = N0.astype(np.int64)
    for blk, spectra in pair_spectra_scan(V, np.arange(size), threads=threads):
        power2 = np.abs(spectra) ** 2
        Na = _round_counts(_inverse_batch(power2, ctx, threads) * size)
        viol2[blk] = np.sum(Na * size * size > thr2, axis=1)
    cond2 = viol2 <= eta * size

    cond3, method, confident, samples = pattern_condition_scan(
        V, eta, supp_sizes=supp_sizes, pattern_samples=pattern_samples,
        exact_budget=exact_budget, seed=seed, threads=threads)

    regular = (cond1 & cond2 & cond3).astype(np.uint8)
    return RegularityReport(
        eta=float(eta),
        cond_translate=cond1,
        cond_fourfold=cond2,
        cond_pattern=cond3,
        regular_set=GSubset(ctx, regular),
        pattern_method=method,
        pattern_confident=confident,
        pattern_samples=samples,
    )


def claim_translate_statistic(V: GSubset, r: int, *, samples: int = 2000,
                              seed: int = 0) -> float:
    """E over r-tuples of (|V ∩ (V-a_1) ∩ ... ∩ (V-a_r)|/|G| - delta^(r+1))^2.

    Exact for r = 1 (one transform covers all shifts); seeded sampling for
    r >= 2.
    """
    ctx = V.ctx
    size = ctx.size
    delta = float(V.density)
    if r == 1:
        N0 = difference_count_table(V)
        return float(np.mean((N0 / size - delta ** 2) ** 2))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    memb = V.membership
    base = V.indices()
    acc = 0.0
    for _ in range(samples):
        shifts = rng.integers(0, size, size=r)
        inter = base
        for a in shifts:
            perm = _kernels.shift_perm(ctx.p, ctx.n, int(a))
            inter = inter[memb[perm[inter]] == 1]
        acc += (inter.size / size - delta ** (r + 1)) ** 2
    return acc / samples
