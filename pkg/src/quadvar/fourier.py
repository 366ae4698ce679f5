"""Character transform over F_p^n, convolutions, and Gowers U^2 / U^3 norms.

Conventions (fixed throughout the package):
  fourier:      f_hat(r) = E_x f(x) omega^(-r.x),  omega = exp(2*pi*i/p)
  inverse:      f(x)     = sum_r f_hat(r) omega^(r.x)
  convolution:  (f * g)(x) = E_y f(y + x) conj(g(y))   [difference convolution]
so (f * g)^ = f_hat . conj(g_hat), and the order-2k iterated
self-convolution of a real table equals sum_r |f_hat(r)|^2k omega^(r.x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .group import ContextMismatchError, GSubset, VectorSpaceCtx
from .linalg import Subspace


@dataclass(frozen=True)
class RealTable:
    ctx: VectorSpaceCtx
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (self.ctx.size,):
            raise ValueError("table length must equal p^n")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class FourierTable:
    ctx: VectorSpaceCtx
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.complex128)
        if v.shape != (self.ctx.size,):
            raise ValueError("table length must equal p^n")
        object.__setattr__(self, "values", v)


def indicator(subset: GSubset) -> RealTable:
    return RealTable(subset.ctx, subset.membership.astype(np.float64))


def balanced_indicator(subset: GSubset) -> RealTable:
    """1_V - delta, the mean-zero indicator."""
    delta = float(subset.density)
    return RealTable(subset.ctx, subset.membership.astype(np.float64) - delta)


def _forward_raw(values, ctx: VectorSpaceCtx) -> np.ndarray:
    return _kernels.dft(values, ctx.p, ctx.n, -1) / ctx.size


def _inverse_raw(values, ctx: VectorSpaceCtx) -> np.ndarray:
    return _kernels.dft(values, ctx.p, ctx.n, +1)


def fourier(f: RealTable) -> FourierTable:
    return FourierTable(f.ctx, _forward_raw(f.values, f.ctx))


def inverse_fourier(F: FourierTable) -> RealTable:
    return RealTable(F.ctx, _inverse_raw(F.values, F.ctx).real)


def convolve(f: RealTable, g: RealTable) -> RealTable:
    """(f * g)(x) = E_y f(y + x) conj(g(y))."""
    if f.ctx != g.ctx:
        raise ContextMismatchError("convolution operands in different contexts")
    fh = _forward_raw(f.values, f.ctx)
    gh = _forward_raw(g.values, g.ctx)
    return RealTable(f.ctx, _inverse_raw(fh * np.conj(gh), f.ctx).real)


def iterated_convolution(f: RealTable, order: int) -> RealTable:
    """Order-2k alternating-sign self-correlation of a real table."""
    if order < 2 or order % 2:
        raise ValueError("order must be an even integer >= 2")
    fh = _forward_raw(f.values, f.ctx)
    power = np.abs(fh) ** order
    return RealTable(f.ctx, _inverse_raw(power.astype(np.complex128), f.ctx).real)


def u2_norm(f: RealTable) -> float:
    """||f||_{U^2} = (sum_r |f_hat(r)|^4)^(1/4)."""
    fh = _forward_raw(f.values, f.ctx)
    return float(np.sum(np.abs(fh) ** 4) ** 0.25)


def u3_fourth_powers(f: RealTable, threads=None) -> np.ndarray:
    """Per-shift table c -> sum_r |(D_c f)^hat(r)|^4 (the U^2 fourth powers
    of every multiplicative derivative); the U^3 norm is its mean^(1/8)."""
    ctx = f.ctx
    size = ctx.size
    vals = f.values
    out = np.empty(size, dtype=np.float64)
    chunk = 64
    for lo in range(0, size, chunk):
        blk = np.arange(lo, min(size, lo + chunk))
        perms = np.empty((blk.size, size), dtype=np.int64)
        for i, c in enumerate(blk):
            perms[i] = _kernels.shift_perm(ctx.p, ctx.n, int(c))
        H = (vals[np.newaxis, :] * vals[perms]).astype(np.complex128)
        _kernels.dft_batch_inplace(H, ctx.p, ctx.n, -1, threads=threads)
        out[blk] = np.sum(np.abs(H / size) ** 4, axis=1)
    return out


def u3_norm(f: RealTable, threads=None) -> float:
    """||f||_{U^3} = (E_c ||D_c f||_{U^2}^4)^(1/8)."""
    powers = u3_fourth_powers(f, threads=threads)
    return float(np.mean(powers) ** 0.125)


def spectral_max(subset: GSubset) -> float:
    """max over r != 0 of |1_V^hat(r)|."""
    fh = _forward_raw(subset.membership.astype(np.float64), subset.ctx)
    mags = np.abs(fh)
    mags[0] = 0.0
    return float(mags.max())


def restricted_fourier_max(A: GSubset, K: Subspace, t) -> float:
    """max over characters nontrivial on K of |E_{x in K} 1_A(x + t) w^(-k.x)|.

    Restricting a global character to K gives every character of K ~ F_p^m,
    so the maximum is over the nonzero spectrum of the pulled-back table.
    """
    ctx = A.ctx
    if K.ctx != ctx:
        raise ContextMismatchError("subspace context differs from the set context")
    if hasattr(t, "coords"):
        t = np.asarray(t.coords, dtype=np.int64)
    else:
        t = np.asarray(t, dtype=np.int64) % ctx.p
    m = K.dim
    if m == 0:
        return 0.0
    coeffs = K.ctx_coeff_grid(m)
    pts = (coeffs @ K.basis + t) % ctx.p
    table = A.membership[ctx.coords_to_index(pts)].astype(np.float64)
    sub_ctx = VectorSpaceCtx(ctx.p, m)
    fh = _forward_raw(table, sub_ctx)
    mags = np.abs(fh)
    mags[0] = 0.0
    return float(mags.max())
