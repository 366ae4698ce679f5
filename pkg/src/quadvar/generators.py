"""Synthetic instance construction: layer varieties, the Sidon-sum cube-closed
counterexample, random-subspace polynomial pullbacks, noise, and the exact
random-coset probability law with its Monte-Carlo oracle.

All randomness is drawn from numpy PCG64 generators seeded with the 64-bit
seed recorded in the instance spec.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .counting import cube_completion_probability, quadruple_count
from .forms import BilinearMap, min_direction_rank
from .group import GSubset, VectorSpaceCtx
from .linalg import Subspace, rank

RNG_NAME = "numpy PCG64"


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


# ---------------------------------------------------------------------------
# small-field arithmetic for the Sidon parabola

def _poly_mul_mod(a, b, modulus, p):
    """Multiply residues a, b (coefficient lists, low degree first) modulo a
    monic polynomial over F_p."""
    m = len(modulus) - 1
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    for k in range(len(prod) - 1, m - 1, -1):
        c = prod[k]
        if c:
            prod[k] = 0
            for j in range(m + 1):
                prod[k - m + j] = (prod[k - m + j] - c * modulus[j]) % p
    return prod[:m] + [0] * (m - len(prod[:m]))


def _find_irreducible(p: int, m: int):
    """Smallest monic irreducible polynomial of degree m over F_p
    (coefficients low degree first, leading coefficient 1)."""
    if m == 1:
        return [0, 1]
    lower = []
    for deg in range(1, m // 2 + 1):
        for idx in range(p ** deg):
            coeffs = [(idx // p ** i) % p for i in range(deg)] + [1]
            lower.append(coeffs)

    def divisible(poly, div):
        rem = list(poly)
        dd = len(div) - 1
        while len(rem) - 1 >= dd:
            lead = rem[-1]
            if lead:
                for j in range(dd + 1):
                    rem[len(rem) - 1 - dd + j] = (rem[len(rem) - 1 - dd + j] - lead * div[j]) % p
            rem.pop()
        return not any(rem)

    for idx in range(p ** m):
        cand = [(idx // p ** i) % p for i in range(m)] + [1]
        if all(not divisible(cand, div) for div in lower):
            return cand
    raise RuntimeError("no irreducible polynomial found")


def field_square_table(p: int, m: int) -> np.ndarray:
    """sq[i] = canonical index of t^2 in F_{p^m}, for every element index i."""
    modulus = _find_irreducible(p, m)
    size = p ** m
    table = np.empty(size, dtype=np.int64)
    for idx in range(size):
        coeffs = [(idx // p ** i) % p for i in range(m)]
        sq = _poly_mul_mod(coeffs, coeffs, modulus, p)
        table[idx] = sum(c * p ** i for i, c in enumerate(sq))
    return table


# ---------------------------------------------------------------------------
# instance generators

def gen_random(ctx: VectorSpaceCtx, density: float, seed) -> GSubset:
    rng = _rng(seed)
    memb = (rng.random(ctx.size) < density).astype(np.uint8)
    return GSubset(ctx, memb)


def random_symmetric_bilinear(ctx: VectorSpaceCtx, d: int, seed,
                              min_rank: int | None = None) -> BilinearMap:
    """Random symmetric bilinear map with every nonzero direction of rank
    at least min_rank (default n - 2), by rejection sampling."""
    if min_rank is None:
        min_rank = ctx.n - 2
    rng = _rng(seed)
    while True:
        mats = []
        inv2 = (ctx.p + 1) // 2
        for _ in range(d):
            M = rng.integers(0, ctx.p, size=(ctx.n, ctx.n))
            mats.append(((M + M.T) * inv2) % ctx.p)
        form = BilinearMap(ctx, np.array(mats))
        if min_direction_rank(form) >= min_rank:
            return form


def gen_layer_variety(ctx: VectorSpaceCtx, gamma: BilinearMap,
                      lam_subspace: Subspace) -> GSubset:
    """V = {x : gamma(x, x) in Lambda} for a subspace Lambda of F_p^d."""
    if not gamma.is_symmetric:
        raise ValueError("gamma must be symmetric")
    if lam_subspace.ctx.p != ctx.p or lam_subspace.ctx.n != gamma.d:
        raise ValueError("Lambda must live in the gamma codomain F_p^d")
    diag = gamma.diagonal_values()  # (size, d)
    ann = lam_subspace.orthogonal_complement().basis  # rows annihilate Lambda
    if ann.shape[0] == 0:
        return GSubset.full(ctx)
    hits = np.all((diag @ ann.T) % ctx.p == 0, axis=1)
    return GSubset(ctx, hits.astype(np.uint8))


@dataclass
class SidonInstance:
    subset: GSubset
    u_dim: int
    m: int
    s_quadruples: int
    completion: Fraction | None


def gen_sidon_counterexample(ctx: VectorSpaceCtx, u_dim: int,
                             verify_completion: bool | None = None) -> SidonInstance:
    """V = U + S in G = U ⊕ T, where S = {(t, t^2) : t in F_{p^m}} is the
    field parabola inside T = F_p^m x F_p^m.

    The parabola is Sidon: t + u = v + w and t^2 + u^2 = v^2 + w^2 force
    {t, u} = {v, w} as multisets in odd characteristic. The construction
    verifies the Sidon census exactly and, at desk scale, the cube-completion
    probability of V (which is exactly 1).
    """
    t_dim = ctx.n - u_dim
    if u_dim < 0 or t_dim < 2:
        raise ValueError("need dim T >= 2")
    if t_dim % 2:
        raise ValueError("dim T must be even for the parabola construction")
    m = t_dim // 2
    p = ctx.p
    sq = field_square_table(p, m)

    pu = p ** u_dim
    pm = p ** m
    t_idx = np.arange(pm, dtype=np.int64)
    s_local = t_idx + pm * sq  # index of (t, t^2) inside T
    u_idx = np.arange(pu, dtype=np.int64)
    all_idx = (u_idx[:, None] + pu * s_local[None, :]).ravel()
    V = GSubset.from_indices(ctx, all_idx)

    t_ctx = VectorSpaceCtx(p, t_dim)
    S = GSubset.from_indices(t_ctx, s_local)
    squads = quadruple_count(S)
    expected = 2 * pm ** 2 - pm
    if squads != expected:
        raise AssertionError("parabola census is not Sidon")

    if verify_completion is None:
        verify_completion = ctx.size <= 3 ** 6
    completion = cube_completion_probability(V) if verify_completion else None
    if completion is not None and completion != 1:
        raise AssertionError("Sidon sum failed the cube-closure check")
    return SidonInstance(V, u_dim, m, squads, completion)


def gen_polynomial_pullback(A: GSubset, F: BilinearMap, d: int, seed):
    """V = {x in A : F(x) in U} for U a uniformly random codimension-d
    subspace of H = F_p^(dim F), sampled as a random invertible image of a
    fixed one. Returns (V, U)."""
    ctx = A.ctx
    h = F.d
    if not 0 <= d <= h:
        raise ValueError("codimension d out of range")
    rng = _rng(seed)
    p = ctx.p
    hctx = VectorSpaceCtx(p, h) if h >= 1 else None
    while True:
        L = rng.integers(0, p, size=(h, h))
        if rank(L, p) == h:
            break
    base = np.eye(h, dtype=np.int64)[: h - d]
    U = Subspace(hctx, (base @ L.T) % p)
    if d == 0:
        return GSubset(ctx, A.membership.copy()), U
    vals = F.diagonal_values()
    ann = U.orthogonal_complement().basis
    hits = np.all((vals @ ann.T) % p == 0, axis=1)
    memb = (A.membership.astype(bool) & hits).astype(np.uint8)
    return GSubset(ctx, memb), U


def random_quadratic_map(ctx: VectorSpaceCtx, h: int, seed) -> BilinearMap:
    """Generic quadratic map G -> F_p^h given by symmetric forms."""
    rng = _rng(seed)
    inv2 = (ctx.p + 1) // 2
    mats = []
    for _ in range(h):
        M = rng.integers(0, ctx.p, size=(ctx.n, ctx.n))
        mats.append(((M + M.T) * inv2) % ctx.p)
    return BilinearMap(ctx, np.array(mats))


def perturb(V: GSubset, noise_rate: float, seed) -> GSubset:
    """Flip each membership bit independently with the given probability."""
    if not 0 <= noise_rate <= 1:
        raise ValueError("noise rate must lie in [0, 1]")
    rng = _rng(seed)
    flips = rng.random(V.ctx.size) < noise_rate
    return GSubset(V.ctx, (V.membership.astype(bool) ^ flips).astype(np.uint8))


# ---------------------------------------------------------------------------
# random-coset probability law

def random_coset_probability(p: int, n: int, d: int, m: int) -> Fraction:
    """P(v_1, ..., v_m in U) for m independent vectors and U a uniformly
    random codimension-d subspace of F_p^n, exactly."""
    if m < 0 or d < 0:
        raise ValueError("d and m must be nonnegative")
    if m + d > n:
        raise ValueError("m + d exceeds n")
    prob = Fraction(1)
    for k in range(m):
        prob *= Fraction(p ** (n - d) - p ** k, p ** n - p ** k)
    return prob


def random_coset_probability_mc(p: int, n: int, d: int, m: int,
                                samples: int = 100_000, seed: int = 0) -> dict:
    """Monte-Carlo oracle for the coset probability: sample U as the kernel
    of a uniform full-rank d x n matrix and test e_1, ..., e_m in U."""
    if m + d > n:
        raise ValueError("m + d exceeds n")
    if m == 0:
        return {"estimate": 1.0, "stderr": 0.0, "samples": samples}
    rng = _rng(seed)
    lam_count = p ** d
    if lam_count > 10_000:
        raise ValueError("d too large for the vectorized full-rank filter")
    grid = np.indices((p,) * d).reshape(d, -1).T  # all of F_p^d
    grid = grid[np.any(grid, axis=1)]
    hits = 0
    total = 0
    batch = 20_000
    while total < samples:
        B = min(batch, samples - total)
        mats = rng.integers(0, p, size=(B, d, n))
        fullrank = np.ones(B, dtype=bool)
        for lam in grid:
            fullrank &= np.any((lam @ mats) % p != 0, axis=1)
        good = mats[fullrank]
        # e_i in ker(M) for i < m  <=>  the first m columns vanish
        hits += int(np.all(good[:, :, :m] == 0, axis=(1, 2)).sum())
        total_good = good.shape[0]
        total += total_good
    est = hits / total
    stderr = float(np.sqrt(max(est * (1 - est), 1e-12) / total))
    return {"estimate": est, "stderr": stderr, "samples": total}


def coset_probability_sandwich(p: int, n: int, d: int, m: int) -> bool:
    """Check p^(-md) - 4 p^(m+d-n) <= P <= p^(-md) (valid when m + d + 2 < n)."""
    prob = random_coset_probability(p, n, d, m)
    upper = Fraction(1, p ** (m * d))
    lower = upper - 4 * Fraction(p ** (m + d), p ** n)
    return lower <= prob <= upper


# ---------------------------------------------------------------------------
# instance specs (CLI-facing, fully deterministic given the seed)

@dataclass
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)
    rng_seed: int = 0

    def as_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params),
                "rng_seed": self.rng_seed, "rng": RNG_NAME}

    def build(self, ctx: VectorSpaceCtx):
        """Returns (GSubset, extras dict)."""
        k = self.kind
        if k == "layer_variety":
            d = int(self.params.get("d", 1))
            lam_dim = int(self.params.get("lambda_dim", 0))
            gamma = random_symmetric_bilinear(ctx, d, self.rng_seed)
            dctx = VectorSpaceCtx(ctx.p, d)
            lam = Subspace(dctx, np.eye(d, dtype=np.int64)[:lam_dim])
            V = gen_layer_variety(ctx, gamma, lam)
            return V, {"gamma": gamma, "lambda": lam}
        if k == "sidon_sum":
            u_dim = int(self.params.get("u_dim", max(ctx.n - 2, 0)))
            inst = gen_sidon_counterexample(ctx, u_dim)
            return inst.subset, {"instance": inst}
        if k == "polynomial_pullback":
            h = int(self.params.get("h", max(ctx.n // 2, 1)))
            d = int(self.params.get("d", 1))
            a_density = self.params.get("a_density")
            if a_density is None:
                A = GSubset.full(ctx)
            else:
                A = gen_random(ctx, float(a_density), self.rng_seed + 1)
            F = random_quadratic_map(ctx, h, self.rng_seed)
            V, U = gen_polynomial_pullback(A, F, d, self.rng_seed + 2)
            return V, {"F": F, "U": U, "A": A}
        if k == "random":
            density = float(self.params.get("density", 0.5))
            return gen_random(ctx, density, self.rng_seed), {}
        if k == "perturbed":
            base = GeneratorSpec(**self.params["base"])
            rate = float(self.params["rate"])
            V, extras = base.build(ctx)
            return perturb(V, rate, self.rng_seed + 17), extras
        raise ValueError(f"unknown generator kind: {self.kind}")
