"""Three-stage recovery of an exact quadratic variety from an approximate one.

Stage 1 builds a family of subspaces W_a from popular-difference level sets
of the self-convolutions of 1_{V ∩ V-a}; stage 2 solves for the bilinear
forms vanishing on the family's incidences (with a consensus filter); stage 3
symmetrizes, votes an affine part, and assembles the variety.

Default thresholds follow the shapes xi*delta^7, tau*delta^3, delta^2/2 with
order-one constants; every default is echoed into reports.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .counting import (_inverse_batch, _round_counts, difference_count_table,
                       pair_spectra_scan, pattern_condition_scan)
from .forms import AffineMap, BilinearMap, QuadraticVariety, min_direction_rank, symmetrize
from .group import GSubset, VectorSpaceCtx
from .linalg import (LinearMap, Subspace, invert_matrix, log_p_ceil, nullspace,
                     quadruple_isomorphisms, rank, row_basis)


class StageError(RuntimeError):
    """A pipeline stage declined to produce output; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.reason = message


@dataclass
class RecoveryConfig:
    d_out: int = 1
    seed: int = 0
    eta: float = 0.05            # regularity exception budget
    xi: float = 0.5              # L2 convolution-mass gate, times delta^7
    tau: float = 0.5             # popular-difference threshold, times delta^3
    k_cap: float = 4.0           # span size cap, times delta |G|
    fill_min: float = 0.6        # popular-difference coverage needed to grow a span
    ratio_min: float = 0.25      # |W_a| / (delta |G|) window [ratio_min, 1/ratio_min]
    conv8_min: float = 0.25      # iterated-convolution floor, times delta^15
    conv8_fail_frac: float = 0.5  # drop a only when most of W_a fails the floor
    consensus_floor: float = 0.25  # min surviving fraction of the family
    conc_min: float = 0.5        # level-set concentration gate in stage 3
    rank_min: int | None = None  # minimum direction rank (default n - 2)
    regularity_samples: int = 2000
    quality_samples: int = 200
    goodness_samples: int = 8
    consensus_cap: int = 512
    consensus_min: float = 0.5
    ransac_trials: int = 16
    ransac_accept_min: float = 0.6
    span_tries_cap: int = 64
    psi_consensus_min: float = 0.1
    overlap_min: float = 0.5
    threads: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SubspaceFamily:
    ctx: VectorSpaceCtx
    members: np.ndarray                 # sorted indices a in A
    subspaces: dict                     # a -> Subspace W_a (codim exactly d)
    annihilators: dict                  # a -> basis rows of W_a^perp
    d: int                              # common codimension
    quality_k: float
    quality_eta: float
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.members)


@dataclass
class RecoveryResult:
    status: str                          # ok | low_confidence | degenerate | refused
    stage: str | None = None
    reason: str | None = None
    beta: BilinearMap | None = None
    gamma: BilinearMap | None = None
    psi: AffineMap | None = None
    mu: np.ndarray | None = None
    variety: QuadraticVariety | None = None
    variety_set: GSubset | None = None
    overlap: Fraction | None = None
    size_ratio: Fraction | None = None
    d_tilde: int | None = None
    diagnostics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


def _add_index_array(ctx: VectorSpaceCtx, arr: np.ndarray, c: int) -> np.ndarray:
    """Digitwise index addition arr + c."""
    return _kernels.index_add(arr, c, ctx.p, ctx.n)


def _scale_index(ctx: VectorSpaceCtx, idx: int, k: int) -> int:
    p = ctx.p
    res = 0
    pw = 1
    for _ in range(ctx.n):
        res += (((idx // pw) % p) * k % p) * pw
        pw *= p
    return res


def _quad_partner(ctx: VectorSpaceCtx, a: int, b: int, c: int) -> int:
    """Index of a + b - c."""
    p = ctx.p
    res = 0
    pw = 1
    for _ in range(ctx.n):
        da = (a // pw) % p
        db = (b // pw) % p
        dc = (c // pw) % p
        res += ((da + db - dc) % p) * pw
        pw *= p
    return res


def step1_build_family(V: GSubset, eta: float | None = None, tau: float | None = None,
                       config: RecoveryConfig | None = None) -> SubspaceFamily:
    """Regular elements, popular-difference spans, trimmed to a common
    codimension, with sampled intersection quality (K, eta)."""
    cfg = config or RecoveryConfig()
    eta = cfg.eta if eta is None else eta
    tau = cfg.tau if tau is None else tau
    ctx = V.ctx
    size = ctx.size
    nv = len(V)
    if nv == 0:
        raise StageError("step1", "empty input set")
    delta = nv / size
    memb = V.membership

    # regularity conditions (i) and (iii) up front; (ii) is fused into the
    # per-shift scan below, which needs the same pair tables anyway
    N0 = difference_count_table(V)
    cond1 = (2 * N0 * size >= nv * nv) & (N0 * size <= 2 * nv * nv)
    cond3, pattern_method, _, _ = pattern_condition_scan(
        V, eta, supp_sizes=N0.astype(np.int64),
        pattern_samples=cfg.regularity_samples, seed=cfg.seed,
        threads=cfg.threads or None)
    candidates = np.flatnonzero(cond1 & cond3).astype(np.int64)

    thr2 = 2 * nv ** 3
    eta_viol_cap = eta * size

    mass_floor = cfg.xi * delta ** 7
    pop_floor = tau * delta ** 3 * size
    conv8_floor = cfg.conv8_min * delta ** 15
    cap = cfg.k_cap * delta * size
    lo_sz = cfg.ratio_min * delta * size
    hi_sz = delta * size / cfg.ratio_min

    counts = {"candidates": int(candidates.size), "regular": 0, "mass_pass": 0,
              "span_built": 0, "accepted": 0}
    spans = {}
    conv8_failures = {}

    pop_floor_counts = pop_floor - 1e-9

    def build_span(Na):
        pop = np.flatnonzero(Na >= pop_floor_counts)
        if pop.size == 0:
            return None
        order = np.lexsort((pop, -Na[pop]))
        queue = pop[order]
        queue = queue[queue != 0]
        span_elems = np.array([0], dtype=np.int64)
        span_mask = np.zeros(size, dtype=bool)
        span_mask[0] = True
        basis_rows = []
        tries = 0
        i = 0
        while i < queue.size:
            b = int(queue[i])
            i += 1
            if span_mask[b]:
                continue
            if span_elems.size * ctx.p > cap:
                break
            if tries >= cfg.span_tries_cap:
                break
            tries += 1
            shifted = [span_elems]
            for k in range(1, ctx.p):
                kb = _scale_index(ctx, b, k)
                shifted.append(_add_index_array(ctx, span_elems, kb))
            new_elems = np.concatenate(shifted)
            fill = np.mean(Na[new_elems] >= pop_floor_counts)
            if fill >= cfg.fill_min:
                span_elems = new_elems
                span_mask[new_elems] = True
                rest = queue[i:]
                queue = rest[~span_mask[rest]]
                i = 0
                basis_rows.append(ctx.index_to_coords(b))
        return span_elems, basis_rows

    threads = cfg.threads or None
    for blk, spectra in pair_spectra_scan(V, candidates, threads=threads):
        power2 = np.abs(spectra) ** 2
        Na_block = _round_counts(_inverse_batch(power2, ctx, threads) * size)
        # regularity condition (ii) on the same pair tables
        regular_rows = np.sum(Na_block * size * size > thr2, axis=1) <= eta_viol_cap
        counts["regular"] += int(regular_rows.sum())
        l2mass = np.sum(power2 ** 2, axis=1)
        passing = regular_rows & (l2mass >= mass_floor)
        counts["mass_pass"] += int(passing.sum())
        if not passing.any():
            continue
        conv8_rows = []
        for row in np.flatnonzero(passing):
            a = blk[row]
            built = build_span(Na_block[row])
            if built is None:
                continue
            counts["span_built"] += 1
            span_elems, basis_rows = built
            if not (lo_sz <= span_elems.size <= hi_sz):
                continue
            counts["accepted"] += 1
            W = Subspace(ctx, np.array(basis_rows, dtype=np.int64).reshape(-1, ctx.n))
            spans[int(a)] = W
            conv8_rows.append((row, int(a), span_elems))
        if conv8_rows:
            sel = np.array([r for r, _, _ in conv8_rows])
            conv8 = _inverse_batch(power2[sel] ** 4, ctx, threads)
            for j, (_, a, span_elems) in enumerate(conv8_rows):
                fails = int(np.sum(conv8[j][span_elems] < conv8_floor - 1e-12))
                if fails:
                    conv8_failures[a] = fails
                    # spans mostly below the iterated-convolution floor are
                    # not delivering level-set structure; by default this is
                    # reported, and it gates only when clearly catastrophic
                    if fails > cfg.conv8_fail_frac * span_elems.size:
                        del spans[a]
                        counts["accepted"] -= 1

    if not spans:
        raise StageError(
            "step1",
            "no usable subspace family: gates left no elements "
            f"(counts: {counts})")

    codims = np.array([ctx.n - W.dim for W in spans.values()])
    vals, freq = np.unique(codims, return_counts=True)
    d_family = int(vals[np.argmax(freq)])

    members = []
    subspaces = {}
    annihilators = {}
    trimmed = dropped = 0
    for a in sorted(spans):
        W = spans[a]
        codim = ctx.n - W.dim
        if codim > d_family:
            dropped += 1
            continue
        if codim < d_family:
            # arbitrary subspace of codimension exactly d inside W: drop the
            # trailing echelon basis rows
            W = Subspace(ctx, W.basis[: ctx.n - d_family])
            trimmed += 1
        members.append(a)
        subspaces[a] = W
        annihilators[a] = W.orthogonal_complement().basis
    if not members:
        raise StageError("step1", "no subspaces at the modal codimension")
    members = np.array(members, dtype=np.int64)

    quality_k, quality_eta = _family_quality(
        ctx, members, annihilators, d_family, cfg)

    diag = {
        "delta": delta,
        "counts": counts,
        "conv8_failures": sum(conv8_failures.values()),
        "trimmed": trimmed,
        "dropped_codim": dropped,
        "d": d_family,
        "regularity_method": pattern_method,
        "thresholds": {
            "eta": eta, "tau": tau, "xi": cfg.xi, "k_cap": cfg.k_cap,
            "fill_min": cfg.fill_min, "ratio_min": cfg.ratio_min,
            "conv8_min": cfg.conv8_min,
        },
    }
    return SubspaceFamily(ctx, members, subspaces, annihilators, d_family,
                          quality_k, quality_eta, diag)


def _family_quality(ctx, members, annihilators, d, cfg):
    """Sampled normalized r-fold intersection excesses for r-fold counts up
    to 9, truncated to r*d <= n (beyond that the excess is structural):
    K is the 95th-percentile ratio, eta the fraction exceeding K."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed + 1))
    per_r = max(4, cfg.quality_samples // 8)
    k_best = 1.0
    eta_best = 0.0
    r_hi = min(9, ctx.n // max(d, 1))
    for r in range(2, r_hi + 1):
        ratios = []
        for _ in range(per_r):
            picks = rng.choice(members, size=r, replace=True)
            stacked = np.concatenate([annihilators[int(a)] for a in picks], axis=0)
            s = rank(stacked, ctx.p)
            inter_dim = ctx.n - s
            ratios.append(float(ctx.p) ** (inter_dim + r * d - ctx.n))
        ratios = np.array(ratios)
        k_r = max(1.0, float(np.quantile(ratios, 0.95)))
        eta_r = float(np.mean(ratios > k_r * (1 + 1e-9)))
        k_best = max(k_best, k_r)
        eta_best = max(eta_best, eta_r)
    return k_best, eta_best


def _goodness(ctx, annihilators, quad, d, K):
    """Good additive quadruple: triple sums at least K^-1 p^3d, four-fold sum
    at most K^3 p^3d (annihilator sums computed exactly)."""
    p = ctx.p
    bases = [annihilators[int(a)] for a in quad]
    for trip in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        s = rank(np.concatenate([bases[t] for t in trip], axis=0), p)
        if Fraction(p) ** (3 * d - s) > K:
            return False
    s4 = rank(np.concatenate(bases, axis=0), p)
    if Fraction(p) ** (s4 - 3 * d) > K ** 3:
        return False
    return True


def _sample_quadruples(ctx, members, member_mask, rng, count):
    """Additive quadruples (a, b, c, a+b-c) with all four entries in A."""
    quads = []
    attempts = 0
    while len(quads) < count and attempts < 20 * count:
        attempts += 1
        a, b, c = rng.choice(members, size=3, replace=True)
        dd = _quad_partner(ctx, int(a), int(b), int(c))
        if member_mask[dd]:
            quads.append((int(a), int(b), int(c), dd))
    return quads


def step2_fit_bilinear(family: SubspaceFamily, d_out: int,
                       config: RecoveryConfig | None = None):
    """Basis of the bilinear forms vanishing on the family incidences,
    restricted to a consensus subset of A, truncated to d_out directions of
    highest rank. Returns (BilinearMap, info)."""
    cfg = config or RecoveryConfig()
    ctx = family.ctx
    p = ctx.p
    n = ctx.n
    if len(family) == 0:
        raise StageError("step2", "empty family")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed + 2))
    members = family.members
    member_mask = np.zeros(ctx.size, dtype=bool)
    member_mask[members] = True
    K = Fraction(max(family.quality_k, 1.0)).limit_denominator(10 ** 6)

    # consensus: elements whose sampled quadruples are mostly good;
    # evaluated on a capped deterministic sample of the family
    if len(members) > cfg.consensus_cap:
        pool = np.sort(rng.choice(members, size=cfg.consensus_cap, replace=False))
    else:
        pool = members
    consensus = []
    good_fraction = {}
    for a in pool:
        quads = []
        tried = 0
        while len(quads) < cfg.goodness_samples and tried < 4 * cfg.goodness_samples:
            tried += 1
            b, c = rng.choice(members, size=2, replace=True)
            dd = _quad_partner(ctx, int(a), int(b), int(c))
            if member_mask[dd]:
                quads.append((int(a), int(b), int(c), dd))
        if not quads:
            consensus.append(int(a))
            good_fraction[int(a)] = 1.0
            continue
        good = sum(_goodness(ctx, family.annihilators, q, family.d, K) for q in quads)
        frac = good / len(quads)
        good_fraction[int(a)] = frac
        if frac >= cfg.consensus_min:
            consensus.append(int(a))
    if len(consensus) < max(1, cfg.consensus_floor * len(pool)):
        raise StageError(
            "step2",
            f"good-quadruple consensus collapsed ({len(consensus)} of "
            f"{len(pool)} sampled elements); family is not an approximate "
            "linear system")
    consensus = np.array(sorted(consensus), dtype=np.int64)

    coords = ctx.index_to_coords(consensus)    # (m, n)

    def constraints_for(indices):
        rows = []
        for i in indices:
            a_co = coords[i]
            for brow in family.subspaces[int(consensus[i])].basis:
                rows.append(np.outer(a_co, brow).reshape(-1) % p)
        return np.array(rows, dtype=np.int64).reshape(-1, n * n)

    def agreement_mask(space_rows):
        ok = np.ones(len(consensus), dtype=bool)
        mats = space_rows.reshape(-1, n, n)
        for i, a in enumerate(consensus):
            a_co = coords[i]
            Wb = family.subspaces[int(a)].basis
            for M in mats:
                if ((a_co @ M @ Wb.T) % p).any():
                    ok[i] = False
                    break
        return ok

    all_rows = constraints_for(range(len(consensus)))
    space = nullspace(all_rows, p)

    if space.shape[0] == 0:
        # RANSAC over small subsets, scored by family-wide agreement; only a
        # solution most of the family supports may override the full solve
        need = max(2, -(-(n * n) // max(n - family.d, 1)) + 2)
        best = (0.0, None)
        for t in range(cfg.ransac_trials):
            pick = rng.choice(len(consensus), size=min(need, len(consensus)),
                              replace=False)
            cand = nullspace(constraints_for(sorted(pick)), p)
            if cand.shape[0] == 0:
                continue
            mask = agreement_mask(cand)
            score = float(mask.mean())
            if score > best[0]:
                best = (score, mask)
        if best[1] is not None and best[0] >= cfg.ransac_accept_min:
            refit = nullspace(constraints_for(np.flatnonzero(best[1])), p)
            if refit.shape[0]:
                space = refit
    if space.shape[0] == 0:
        raise StageError("step2", "trivial solution space (only the zero form)")

    # canonical basis, highest direction-rank first
    space = row_basis(space, p)
    ranks = [rank(row.reshape(n, n), p) for row in space]
    order = np.lexsort((np.arange(len(ranks)), [-r for r in ranks]))
    chosen = space[order[:d_out]]
    beta = BilinearMap(ctx, chosen.reshape(-1, n, n))
    info = {
        "consensus_size": int(len(consensus)),
        "family_size": int(len(family)),
        "solution_dim": int(space.shape[0]),
        "agreement": float(agreement_mask(chosen).mean()),
        "d_out_effective": int(chosen.shape[0]),
    }
    return beta, info


def step2_good_quadruple_census(family: SubspaceFamily, samples: int = 200,
                                seed: int = 0) -> dict:
    """Sampled additive quadruples in A: goodness fraction, defect-rank
    histogram from the isomorphism construction, and the 20 log_p K bound."""
    ctx = family.ctx
    p = ctx.p
    rng = np.random.default_rng(np.random.SeedSequence(seed + 3))
    members = family.members
    member_mask = np.zeros(ctx.size, dtype=bool)
    member_mask[members] = True
    K = Fraction(max(family.quality_k, 1.0)).limit_denominator(10 ** 6)
    quads = _sample_quadruples(ctx, members, member_mask, rng, samples)
    n_good = 0
    defects = []
    violations = 0
    k1_total = 0
    k1_zero = 0
    huge_k = Fraction(p) ** (4 * family.d + ctx.n)
    for quad in quads:
        if not _goodness(ctx, family.annihilators, quad, family.d, K):
            continue
        n_good += 1
        subs = [Subspace(ctx, family.annihilators[a]) for a in quad]
        phi4 = LinearMap(p, subs[3].basis.T)
        res = quadruple_isomorphisms(subs[0], subs[1], subs[2], subs[3],
                                     phi4, huge_k)
        defects.append(res.defect_rank)
        if res.k_measured == 1:
            k1_total += 1
            k1_zero += res.defect_rank == 0
        if res.defect_rank > 20 * log_p_ceil(res.k_measured, p):
            violations += 1
    hist = {}
    for dft in defects:
        hist[dft] = hist.get(dft, 0) + 1
    return {
        "sampled": len(quads),
        "good": n_good,
        "good_fraction": n_good / len(quads) if quads else 0.0,
        "defect_histogram": hist,
        "max_defect": max(defects) if defects else None,
        "bound_violations": violations,
        "exact_k_quadruples": k1_total,
        "exact_k_zero_defect": k1_zero,
    }


def _big_endian_index(vals: np.ndarray, p: int) -> np.ndarray:
    """Row vectors over F_p to indices ordered lexicographically."""
    d = vals.shape[-1]
    weights = p ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return vals @ weights


def _decode_big_endian(idx: int, p: int, d: int) -> np.ndarray:
    out = np.zeros(d, dtype=np.int64)
    for i in range(d - 1, -1, -1):
        out[i] = idx % p
        idx //= p
    return out


def step3_extract_variety(V: GSubset, beta: BilinearMap,
                          config: RecoveryConfig | None = None) -> RecoveryResult:
    """Symmetrize, vote level values and an affine part, and assemble the
    variety Q = {q - psi = mu} with q = gamma(x,x)/2."""
    cfg = config or RecoveryConfig()
    ctx = V.ctx
    p = ctx.p
    n = ctx.n
    size = ctx.size
    nv = len(V)
    if nv == 0:
        raise ValueError("empty input set")
    if not beta.nonzero():
        raise ValueError("beta must be nonzero")

    gamma_full = symmetrize(beta)
    rows = row_basis(gamma_full.mats.reshape(gamma_full.d, n * n), p)
    d_t = rows.shape[0]
    gamma = BilinearMap(ctx, rows.reshape(-1, n, n) if d_t else
                        np.zeros((0, n, n), dtype=np.int64))

    def trivial_result(status):
        zero_gamma = BilinearMap(ctx, np.zeros((0, n, n), dtype=np.int64))
        psi0 = AffineMap(LinearMap(p, np.zeros((0, n), dtype=np.int64)),
                         np.zeros(0, dtype=np.int64))
        variety = QuadraticVariety(zero_gamma, psi0, np.zeros(0, dtype=np.int64))
        qset = variety.membership_set()
        return RecoveryResult(
            status=status, beta=beta, gamma=zero_gamma, psi=psi0,
            mu=np.zeros(0, dtype=np.int64), variety=variety, variety_set=qset,
            overlap=Fraction(nv, nv), size_ratio=Fraction(size, nv), d_tilde=0,
            diagnostics={"note": "all level sets flat; trivial variety"},
        )

    # informative elements: dense pair sets whose gamma(a, .) level values
    # concentrate on the pair support
    N0 = difference_count_table(V)
    dense = np.flatnonzero(2 * N0 * size >= nv * nv)
    if dense.size == 0:
        raise StageError("step3", "no a passes the density gate")

    memb = V.membership
    Rtabs = gamma.row_tables() if d_t else None   # (d_t, size, n)
    X = ctx.index_to_coords(np.arange(size))
    inv2 = (p + 1) // 2
    diag_half = (gamma.diagonal_values() * inv2) % p if d_t else \
        np.zeros((size, 0), dtype=np.int64)

    mu_of = {}
    informative = []
    for a in dense:
        rows_a = np.stack([Rtabs[i][a] for i in range(d_t)])
        if not rows_a.any():
            continue  # gamma(a, .) identically zero carries no level signal
        perm = _kernels.shift_perm(p, n, int(a))
        supp = np.flatnonzero(memb & memb[perm])
        if supp.size == 0:
            continue
        vals = (X[supp] @ rows_a.T) % p
        be = _big_endian_index(vals, p)
        hist = np.bincount(be, minlength=p ** d_t)
        top = int(np.argmax(hist))
        conc = hist[top] / supp.size
        if conc >= cfg.conc_min:
            informative.append(int(a))
            mu_of[int(a)] = _decode_big_endian(top, p, d_t)
    if not informative:
        return trivial_result("degenerate")

    rank_min = cfg.rank_min if cfg.rank_min is not None else n - 2
    if min_direction_rank(gamma) < rank_min:
        raise StageError(
            "step3",
            f"recovered form has a direction of rank < {rank_min}; "
            "no quadratic structure claimed")

    P = np.array(informative, dtype=np.int64)
    P_mask = np.zeros(size, dtype=bool)
    P_mask[P] = True
    mu_tilde = np.zeros((size, d_t), dtype=np.int64)
    for a in P:
        mu_tilde[a] = (mu_of[int(a)] + diag_half[a]) % p

    psi, consensus = _fit_affine(ctx, P, P_mask, mu_tilde, d_t, cfg)
    if psi is None:
        raise StageError(
            "step3", f"affine consensus below {cfg.psi_consensus_min:.0%}")

    lin_vals = (X @ psi.linear.matrix.T + psi.offset) % p
    w = _big_endian_index((diag_half - lin_vals) % p, p)
    hist = np.bincount(w[memb.astype(bool)], minlength=p ** d_t)
    mu_idx = int(np.argmax(hist))
    mu = _decode_big_endian(mu_idx, p, d_t)

    q_mask = (w == mu_idx).astype(np.uint8)
    q_set = GSubset(ctx, q_mask)
    psi2 = AffineMap(LinearMap(p, (2 * psi.linear.matrix) % p),
                     (2 * psi.offset) % p)
    variety = QuadraticVariety(gamma, psi2, (2 * mu) % p)
    assert variety.membership_set() == q_set

    inter = int(np.sum(q_mask & memb))
    overlap = Fraction(inter, nv)
    ratio = Fraction(len(q_set), nv)
    status = "ok" if overlap >= cfg.overlap_min else "low_confidence"
    return RecoveryResult(
        status=status, beta=beta, gamma=gamma, psi=psi2, mu=(2 * mu) % p,
        variety=variety, variety_set=q_set, overlap=overlap, size_ratio=ratio,
        d_tilde=d_t,
        diagnostics={
            "informative": int(P.size),
            "dense": int(dense.size),
            "psi_consensus": consensus,
        },
    )


def _fit_affine(ctx, P, P_mask, mu_tilde, d_t, cfg):
    """Affine map agreeing with mu_tilde on as much of P as possible:
    per-direction majority vote, with seeded interpolation retries."""
    p, n, size = ctx.p, ctx.n, ctx.size
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed + 4))

    def consensus_of(L, v):
        vals = (ctx.index_to_coords(P) @ L.T + v) % p
        return float(np.mean(np.all(vals == mu_tilde[P], axis=1)))

    candidates = []
    # majority vote on each coordinate direction
    L = np.zeros((d_t, n), dtype=np.int64)
    votes_ok = True
    for i in range(n):
        e_idx = ctx.p ** i
        shifted = _add_index_array(ctx, P, e_idx)
        ok = P_mask[shifted]
        if not ok.any():
            votes_ok = False
            break
        diffs = (mu_tilde[shifted[ok]] - mu_tilde[P[ok]]) % p
        be = _big_endian_index(diffs, p)
        top = int(np.argmax(np.bincount(be, minlength=p ** d_t)))
        L[:, i] = _decode_big_endian(top, p, d_t)
    if votes_ok:
        resid = (mu_tilde[P] - (ctx.index_to_coords(P) @ L.T)) % p
        be = _big_endian_index(resid, p)
        top = int(np.argmax(np.bincount(be, minlength=p ** d_t)))
        v = _decode_big_endian(top, p, d_t)
        candidates.append((L, v))

    # seeded interpolation fallback: affine map through n+1 sampled points
    for _ in range(cfg.ransac_trials):
        if P.size < n + 1:
            break
        pick = rng.choice(P, size=n + 1, replace=False)
        A = np.concatenate([ctx.index_to_coords(pick),
                            np.ones((n + 1, 1), dtype=np.int64)], axis=1)
        if rank(A, p) < n + 1:
            continue
        Ainv = invert_matrix(A, p)
        sol = (Ainv @ mu_tilde[pick]) % p   # (n+1, d_t)
        candidates.append((sol[:n].T % p, sol[n] % p))

    best = None
    best_score = -1.0
    for L, v in candidates:
        score = consensus_of(L, v)
        if score > best_score + 1e-12:
            best_score = score
            best = (L, v)
    if best is None or best_score < cfg.psi_consensus_min:
        return None, best_score
    L, v = best
    return AffineMap(LinearMap(p, L), v), best_score


def recover(V: GSubset, config: RecoveryConfig | None = None) -> RecoveryResult:
    """Compose the three stages with per-stage timings and diagnostics.
    Stage refusals are returned as a result with status 'refused'."""
    cfg = config or RecoveryConfig()
    if len(V) == 0:
        raise ValueError("empty input set")
    timings = {}
    diagnostics = {"config": cfg.as_dict()}
    t0 = time.perf_counter()
    try:
        family = step1_build_family(V, config=cfg)
        timings["step1"] = time.perf_counter() - t0
        diagnostics["step1"] = dict(family.diagnostics)
        diagnostics["step1"]["family_size"] = len(family)
        diagnostics["step1"]["quality_k"] = family.quality_k
        diagnostics["step1"]["quality_eta"] = family.quality_eta

        t1 = time.perf_counter()
        beta, info = step2_fit_bilinear(family, cfg.d_out, config=cfg)
        timings["step2"] = time.perf_counter() - t1
        diagnostics["step2"] = info

        t2 = time.perf_counter()
        result = step3_extract_variety(V, beta, config=cfg)
        timings["step3"] = time.perf_counter() - t2
    except StageError as err:
        timings["failed_at"] = time.perf_counter() - t0
        return RecoveryResult(status="refused", stage=err.stage, reason=err.reason,
                              diagnostics=diagnostics, timings=timings)
    result.diagnostics.update(diagnostics)
    result.timings = timings
    return result
