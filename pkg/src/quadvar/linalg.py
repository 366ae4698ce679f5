"""Exact linear algebra over F_p: echelon forms, subspaces, linear maps,
and the constructive near-isomorphism / quadruple-isomorphism routines.

Matrices are numpy int64 arrays with entries reduced mod p. Basis matrices
store basis vectors as rows; LinearMap matrices act on column vectors,
apply(x) = M @ x mod p.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .group import ContextMismatchError, VectorSpaceCtx


class PreconditionError(ValueError):
    """A stated hypothesis of a constructive routine fails on the inputs."""


def _modinv(a: int, p: int) -> int:
    return pow(int(a), p - 2, p)


def rref(mat, p):
    """Reduced row echelon form mod p; returns (rref_matrix, pivot_columns)."""
    m = np.array(mat, dtype=np.int64) % p
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = None
        for i in range(r, rows):
            if m[i, c] % p:
                piv = i
                break
        if piv is None:
            continue
        m[[r, piv]] = m[[piv, r]]
        m[r] = (m[r] * _modinv(m[r, c], p)) % p
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % p
        pivots.append(c)
        r += 1
    return m, pivots


def row_basis(mat, p):
    """Canonical (RREF) basis of the row space; zero rows dropped."""
    m, pivots = rref(mat, p)
    return m[: len(pivots)].copy()


def rank(mat, p) -> int:
    if np.asarray(mat).size == 0:
        return 0
    return len(rref(mat, p)[1])


def nullspace(mat, p):
    """Canonical basis (rows) of {x : mat @ x = 0 mod p}."""
    mat = np.asarray(mat, dtype=np.int64) % p
    rows, cols = mat.shape
    m, pivots = rref(mat, p)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = (-m[r, fc]) % p
    return row_basis(basis, p) if len(free) else basis


def invert_matrix(mat, p):
    mat = np.asarray(mat, dtype=np.int64) % p
    d = mat.shape[0]
    if mat.shape != (d, d):
        raise ValueError("matrix must be square")
    aug = np.concatenate([mat, np.eye(d, dtype=np.int64)], axis=1)
    m, pivots = rref(aug, p)
    if pivots[:d] != list(range(d)):
        raise ValueError("matrix is singular")
    return m[:, d:].copy()


def solve(mat, rhs, p):
    """One solution x of mat @ x = rhs mod p, or None if inconsistent."""
    mat = np.asarray(mat, dtype=np.int64) % p
    rhs = np.asarray(rhs, dtype=np.int64) % p
    rows, cols = mat.shape
    aug = np.concatenate([mat, rhs.reshape(rows, 1)], axis=1)
    m, pivots = rref(aug, p)
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.int64)
    for r, c in enumerate(pivots):
        x[c] = m[r, cols]
    return x


@dataclass(frozen=True)
class LinearMap:
    """Linear map F_p^domain -> F_p^codomain given by a (codomain x domain) matrix."""

    p: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.int64) % self.p)

    @property
    def domain_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def codomain_dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x):
        return (self.matrix @ (np.asarray(x, dtype=np.int64) % self.p)) % self.p

    def rank(self) -> int:
        return rank(self.matrix, self.p)

    def __add__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.p, (self.matrix + other.matrix) % self.p)

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.p, (self.matrix - other.matrix) % self.p)

    def compose(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.p, (self.matrix @ other.matrix) % self.p)

    def image_basis(self):
        return row_basis(self.matrix.T, self.p)


@dataclass(frozen=True)
class AffineMap:
    """x -> linear(x) + offset."""

    linear: LinearMap
    offset: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=np.int64) % self.linear.p
        if off.shape != (self.linear.codomain_dim,):
            raise ValueError("offset length must match the codomain dimension")
        object.__setattr__(self, "offset", off)

    def apply(self, x):
        return (self.linear.apply(x) + self.offset) % self.linear.p


class Subspace:
    """Subspace of F_p^n stored as a canonical reduced-echelon basis (rows)."""

    __slots__ = ("ctx", "basis")

    def __init__(self, ctx: VectorSpaceCtx, basis):
        basis = np.asarray(basis, dtype=np.int64).reshape(-1, ctx.n) % ctx.p
        self.ctx = ctx
        self.basis = row_basis(basis, ctx.p)
        self.basis.setflags(write=False)

    @classmethod
    def zero(cls, ctx) -> "Subspace":
        return cls(ctx, np.zeros((0, ctx.n), dtype=np.int64))

    @classmethod
    def full(cls, ctx) -> "Subspace":
        return cls(ctx, np.eye(ctx.n, dtype=np.int64))

    @classmethod
    def from_indices(cls, ctx, indices) -> "Subspace":
        return cls(ctx, ctx.index_to_coords(np.asarray(indices, dtype=np.int64)))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def codim(self) -> int:
        return self.ctx.n - self.dim

    def __len__(self) -> int:
        return self.ctx.p ** self.dim

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subspace)
            and self.ctx == other.ctx
            and self.basis.shape == other.basis.shape
            and np.array_equal(self.basis, other.basis)
        )

    def __hash__(self):
        return hash((self.ctx, self.basis.tobytes()))

    def __repr__(self):
        return f"Subspace(dim={self.dim} of F_{self.ctx.p}^{self.ctx.n})"

    def intersect(self, other: "Subspace") -> "Subspace":
        _same_ctx(self, other)
        return (self.orthogonal_complement() + other.orthogonal_complement()).orthogonal_complement()

    def __add__(self, other: "Subspace") -> "Subspace":
        _same_ctx(self, other)
        return Subspace(self.ctx, np.concatenate([self.basis, other.basis], axis=0))

    def orthogonal_complement(self) -> "Subspace":
        """Annihilator under the standard dot form: {y : b . y = 0 for all b}."""
        if self.dim == 0:
            return Subspace.full(self.ctx)
        return Subspace(self.ctx, nullspace(self.basis, self.ctx.p))

    def contains_vector(self, v) -> bool:
        v = np.asarray(v, dtype=np.int64) % self.ctx.p
        if not v.any():
            return True
        stacked = np.concatenate([self.basis, v.reshape(1, -1)], axis=0)
        return rank(stacked, self.ctx.p) == self.dim

    def contains(self, other: "Subspace") -> bool:
        _same_ctx(self, other)
        if other.dim > self.dim:
            return False
        stacked = np.concatenate([self.basis, other.basis], axis=0)
        return rank(stacked, self.ctx.p) == self.dim

    def element_indices(self) -> np.ndarray:
        """Canonical indices of all p^dim elements (ascending)."""
        return self.coset_indices(None)

    def coset_indices(self, offset) -> np.ndarray:
        """Canonical indices of offset + self, sorted ascending."""
        p, dim = self.ctx.p, self.dim
        coeffs = self.ctx_coeff_grid(dim)
        pts = (coeffs @ self.basis) % p if dim else np.zeros((1, self.ctx.n), dtype=np.int64)
        if offset is not None:
            pts = (pts + np.asarray(offset, dtype=np.int64)) % p
        idx = self.ctx.coords_to_index(pts)
        idx.sort()
        return idx

    def ctx_coeff_grid(self, dim):
        p = self.ctx.p
        if dim == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grid = np.indices((p,) * dim).reshape(dim, -1).T[:, ::-1]
        return np.ascontiguousarray(grid)

    def membership_mask(self) -> np.ndarray:
        mask = np.zeros(self.ctx.size, dtype=np.uint8)
        mask[self.element_indices()] = 1
        return mask

    def complement_within(self, ambient: "Subspace") -> "Subspace":
        """Deterministic complement: extend this basis by ambient basis rows,
        taking rows in echelon order (smallest pivot first)."""
        if not ambient.contains(self):
            raise ValueError("complement requested inside a non-containing space")
        p = self.ctx.p
        cur = self.basis.copy()
        picked = []
        for row in ambient.basis:
            stacked = np.concatenate([cur, row.reshape(1, -1)], axis=0)
            if rank(stacked, p) > cur.shape[0]:
                cur = row_basis(stacked, p)
                picked.append(row)
        return Subspace(self.ctx, np.array(picked, dtype=np.int64).reshape(-1, self.ctx.n))

    def extend_to_full_basis(self) -> np.ndarray:
        """Rows of self.basis followed by standard vectors chosen greedily."""
        p, n = self.ctx.p, self.ctx.n
        rows = [r for r in self.basis]
        cur = self.basis.copy()
        for i in range(n):
            e = np.zeros(n, dtype=np.int64)
            e[i] = 1
            stacked = np.concatenate([cur, e.reshape(1, -1)], axis=0)
            if rank(stacked, p) > cur.shape[0]:
                cur = row_basis(stacked, p)
                rows.append(e)
            if len(rows) == n:
                break
        return np.array(rows, dtype=np.int64)


def _same_ctx(a: Subspace, b: Subspace):
    if a.ctx != b.ctx:
        raise ContextMismatchError("subspaces live in different ambient spaces")


def log_p_ceil(value, p: int) -> int:
    """Smallest integer j with p^j >= value; exact for p-power inputs."""
    value = Fraction(value)
    if value <= 1:
        return 0
    j = 0
    acc = Fraction(1)
    while acc < value:
        acc *= p
        j += 1
    return j


def repair_to_isomorphism(phi: LinearMap) -> LinearMap:
    """Turn a square map of rank d - l into an isomorphism psi with
    rank(phi - psi) = l, via kernel/complement projection."""
    p = phi.p
    d = phi.domain_dim
    if phi.codomain_dim != d:
        raise ValueError("map must be square")
    M = phi.matrix
    ker = nullspace(M, p)  # rows: basis of ker phi
    ell = ker.shape[0]
    if ell == 0:
        return phi
    ident = np.eye(d, dtype=np.int64)
    # complement U of the kernel, image I, complement V of the image,
    # all extended greedily by smallest-index standard vectors
    cur = ker.copy()
    u_rows = []
    for i in range(d):
        e = ident[i]
        if rank(np.concatenate([cur, e.reshape(1, -1)]), p) > cur.shape[0]:
            cur = row_basis(np.concatenate([cur, e.reshape(1, -1)]), p)
            u_rows.append(e)
    cur = row_basis(M.T, p)  # image of the column-convention map
    v_rows = []
    for i in range(d):
        e = ident[i]
        if rank(np.concatenate([cur, e.reshape(1, -1)]), p) > cur.shape[0]:
            cur = row_basis(np.concatenate([cur, e.reshape(1, -1)]), p)
            v_rows.append(e)
        if len(v_rows) == ell:
            break
    V = np.array(v_rows, dtype=np.int64).reshape(-1, d)
    # theta . pi: decompose x = c @ [ker; U], send the kernel coefficients
    # c[:ell] to the matching rows of V
    B = np.concatenate([ker, np.array(u_rows, dtype=np.int64).reshape(-1, d)], axis=0)
    Binv = invert_matrix(B, p)
    theta_pi_row = (Binv[:, :ell] @ V) % p  # row operator x -> x @ theta_pi_row
    psi = LinearMap(p, (M + theta_pi_row.T) % p)
    assert psi.rank() == d
    assert (phi - psi).rank() == ell
    return psi


@dataclass
class QuadrupleIsomorphisms:
    phi1: LinearMap
    phi2: LinearMap
    phi3: LinearMap
    defect_rank: int
    k_measured: Fraction
    defect_bound: int


def quadruple_isomorphisms(U1, U2, U3, U4, phi4: LinearMap, K) -> QuadrupleIsomorphisms:
    """Build isomorphisms phi_i onto U_i with small rank(phi1 + phi2 - phi3 - phi4).

    Follows the complement/projection construction: complements V_i with
    U_i = (U_i ∩ (U_j + U_k)) ⊕ V_i, the direct sum S = V1 ⊕ V2 ⊕ V3 with
    projections s = pi1(s) + pi2(s) - pi3(s), restriction of phi4 to U4 ∩ S,
    and a final repair of each near-isomorphism.

    K is validated against the measured sum sizes; the reported bound uses the
    measured value, never the caller's.
    """
    spaces = [U1, U2, U3, U4]
    ctx = U1.ctx
    d = U1.dim
    p = ctx.p
    for U in spaces[1:]:
        _same_ctx(U1, U)
        if U.dim != d:
            raise ValueError("all four subspaces must share the same dimension")
    if phi4.domain_dim != d or phi4.rank() != d:
        raise PreconditionError("phi4 must be a bijection from F_p^d onto U4")
    img4 = Subspace(ctx, phi4.matrix.T)
    if img4 != U4:
        raise PreconditionError("phi4 must be a bijection from F_p^d onto U4")

    K = Fraction(K)
    p3d = Fraction(p) ** (3 * d)
    k_measured = Fraction(1)
    for trip in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        s = spaces[trip[0]] + spaces[trip[1]] + spaces[trip[2]]
        need = p3d / (p ** s.dim)
        if need > K:
            raise PreconditionError(
                f"triple {tuple(i + 1 for i in trip)} too small: |sum| = p^{s.dim}"
            )
        k_measured = max(k_measured, need)
    s4 = spaces[0] + spaces[1] + spaces[2] + spaces[3]
    excess = Fraction(p) ** s4.dim / p3d
    if excess > K:
        raise PreconditionError(f"four-fold sum too large: |sum| = p^{s4.dim}")
    k_measured = max(k_measured, excess)

    # complements V_i inside U_i
    V = []
    for i in range(3):
        j, k = [t for t in range(3) if t != i]
        Ci = spaces[i].intersect(spaces[j] + spaces[k])
        V.append(Ci.complement_within(spaces[i]))
    S_basis = np.concatenate([v.basis for v in V], axis=0)
    dims = [v.dim for v in V]
    assert rank(S_basis, p) == sum(dims)
    S = Subspace(ctx, S_basis)

    # X = phi4^{-1}(U4 ∩ S), as a subspace of F_p^d
    W4S = U4.intersect(S)
    X_rows = []
    for w in W4S.basis:
        x = solve(phi4.matrix, w, p)
        assert x is not None
        X_rows.append(x)
    X = Subspace(VectorSpaceCtx(p, d), np.array(X_rows, dtype=np.int64).reshape(-1, d))
    Xb = X.basis
    full = X.extend_to_full_basis()

    # values of phi'_i on the X basis via the direct-sum decomposition of S;
    # outside X the maps are extended by zero
    signs = [1, 1, -1]
    val_cols = [[] for _ in range(3)]
    for xvec in Xb:
        s_img = phi4.apply(xvec)
        c = solve(S_basis.T, s_img, p)
        assert c is not None
        off = 0
        for i in range(3):
            ci = c[off:off + dims[i]]
            vi = (ci @ V[i].basis) % p if dims[i] else np.zeros(ctx.n, dtype=np.int64)
            val_cols[i].append((signs[i] * vi) % p)
            off += dims[i]
    for _ in range(full.shape[0] - Xb.shape[0]):
        for i in range(3):
            val_cols[i].append(np.zeros(ctx.n, dtype=np.int64))

    Xmat = full.T  # columns are the basis vectors of F_p^d
    Xinv = invert_matrix(Xmat, p)
    phis_prime = []
    for i in range(3):
        Ymat = np.array(val_cols[i], dtype=np.int64).T
        phis_prime.append(LinearMap(p, (Ymat @ Xinv) % p))

    # repair each phi'_i to an isomorphism onto U_i (in U_i coordinates)
    phis = []
    for i in range(3):
        Ui = spaces[i]
        coord_cols = []
        for j in range(d):
            y = phis_prime[i].matrix[:, j]
            c = solve(Ui.basis.T, y, p)
            assert c is not None
            coord_cols.append(c)
        M_coord = np.array(coord_cols, dtype=np.int64).T % p
        psi_coord = repair_to_isomorphism(LinearMap(p, M_coord))
        phis.append(LinearMap(p, (Ui.basis.T @ psi_coord.matrix) % p))

    defect = (phis[0] + phis[1] - phis[2] - LinearMap(p, phi4.matrix)).rank()
    bound = 20 * log_p_ceil(k_measured, p)
    return QuadrupleIsomorphisms(phis[0], phis[1], phis[2], defect, k_measured, bound)


def uniqueness_defect_bound_check(phi1, phi2, psi1, psi2, theta,
                                  U1, U2, V1, V2, W, r: int) -> bool:
    """Check rank(theta) <= r + log_p |W ∩ (U1+U2+V1+V2)| given that the
    five maps sum to a map of rank at most r. Must hold on valid inputs."""
    maps = [phi1, phi2, psi1, psi2, theta]
    spaces = [U1, U2, V1, V2, W]
    p = phi1.p
    d = phi1.domain_dim
    for mp, sp in zip(maps, spaces):
        if mp.domain_dim != d or mp.codomain_dim != sp.ctx.n:
            raise ValueError("map dimensions do not match the subspaces")
        if not sp.contains(Subspace(sp.ctx, mp.matrix.T)):
            raise ValueError("map image not inside its declared subspace")
    total = LinearMap(p, sum(m.matrix for m in maps) % p)
    if total.rank() > r:
        raise PreconditionError(f"sum of the five maps has rank {total.rank()} > r = {r}")
    inter = W.intersect(U1 + U2 + V1 + V2)
    k = Fraction(p) ** inter.dim
    return theta.rank() <= r + log_p_ceil(k, p)
