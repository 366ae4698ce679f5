"""Ambient space F_p^n: contexts, elements, dense subsets, bit-exact set files.

Canonical index is little-endian base p: index = sum coords[i] * p^i, so
coordinate 0 is the fastest-varying digit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

MAX_SIZE = 2 ** 31

SET_MAGIC = b"FPNSET1\x00"


class ContextMismatchError(ValueError):
    """Operands live in different ambient spaces."""


class SetFormatError(ValueError):
    """Malformed FPNSET1 payload."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class VectorSpaceCtx:
    """The ambient group G = F_p^n with p an odd prime and p^n <= 2^31."""

    p: int
    n: int
    size: int = field(init=False, compare=False)

    def __post_init__(self):
        if self.p < 3 or not is_prime(self.p):
            raise ValueError(f"p must be an odd prime >= 3, got {self.p}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        size = self.p ** self.n
        if size > MAX_SIZE:
            raise ValueError(f"p^n = {size} exceeds the 2^31 size cap")
        object.__setattr__(self, "size", size)

    @property
    def powers(self) -> np.ndarray:
        return self.p ** np.arange(self.n, dtype=np.int64)

    def index_to_coords(self, idx) -> np.ndarray:
        """Decode canonical indices to coordinate vectors (shape (..., n))."""
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., np.newaxis] // self.powers) % self.p

    def coords_to_index(self, coords) -> np.ndarray:
        """Encode coordinate vectors (reduced mod p) to canonical indices."""
        coords = np.asarray(coords, dtype=np.int64) % self.p
        return coords @ self.powers

    def element(self, coords) -> "GroupElement":
        return GroupElement(self, tuple(int(c) % self.p for c in coords))

    def element_from_index(self, idx: int) -> "GroupElement":
        if not 0 <= idx < self.size:
            raise ValueError(f"index {idx} out of range")
        return GroupElement(self, tuple(int(c) for c in self.index_to_coords(idx)))

    def zero(self) -> "GroupElement":
        return GroupElement(self, (0,) * self.n)

    def add_table(self) -> np.ndarray:
        """Full size x size table of idx(x + y); only for small groups."""
        if self.size > 3 ** 7:
            raise ValueError("addition table too large; meant for oracle-scale groups")
        digs = self.index_to_coords(np.arange(self.size))
        summed = (digs[:, np.newaxis, :] + digs[np.newaxis, :, :]) % self.p
        return (summed @ self.powers).astype(np.int32)

    def sub_table(self) -> np.ndarray:
        """Full size x size table of idx(x - y); only for small groups."""
        if self.size > 3 ** 7:
            raise ValueError("subtraction table too large; meant for oracle-scale groups")
        digs = self.index_to_coords(np.arange(self.size))
        diff = (digs[:, np.newaxis, :] - digs[np.newaxis, :, :]) % self.p
        return (diff @ self.powers).astype(np.int32)

    def negation_perm(self) -> np.ndarray:
        digs = (-self.index_to_coords(np.arange(self.size))) % self.p
        return (digs @ self.powers).astype(np.int64)


@dataclass(frozen=True)
class GroupElement:
    """An element of F_p^n with its coordinate tuple and canonical index."""

    ctx: VectorSpaceCtx
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.ctx.n:
            raise ValueError("coordinate length does not match the context dimension")
        if any(not 0 <= c < self.ctx.p for c in self.coords):
            raise ValueError("coordinates must be residues in [0, p)")

    @property
    def canonical_index(self) -> int:
        return int(sum(c * self.ctx.p ** i for i, c in enumerate(self.coords)))

    def __add__(self, other: "GroupElement") -> "GroupElement":
        _check_ctx(self.ctx, other.ctx)
        p = self.ctx.p
        return GroupElement(self.ctx, tuple((a + b) % p for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "GroupElement":
        p = self.ctx.p
        return GroupElement(self.ctx, tuple((-a) % p for a in self.coords))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def scale(self, k: int) -> "GroupElement":
        p = self.ctx.p
        return GroupElement(self.ctx, tuple((a * k) % p for a in self.coords))


def element_add(x: GroupElement, y: GroupElement) -> GroupElement:
    return x + y


def element_neg(x: GroupElement) -> GroupElement:
    return -x


def element_scale(x: GroupElement, k: int) -> GroupElement:
    return x.scale(k)


def _check_ctx(a: VectorSpaceCtx, b: VectorSpaceCtx):
    if a != b:
        raise ContextMismatchError(f"context mismatch: {a} vs {b}")


class GSubset:
    """A dense subset of G as a 0/1 membership array with exact density."""

    __slots__ = ("ctx", "membership", "_density")

    def __init__(self, ctx: VectorSpaceCtx, membership):
        membership = np.ascontiguousarray(membership, dtype=np.uint8)
        if membership.shape != (ctx.size,):
            raise ValueError("membership length must equal p^n")
        if membership.max(initial=0) > 1:
            raise ValueError("membership must be 0/1 valued")
        self.ctx = ctx
        self.membership = membership
        self.membership.setflags(write=False)
        self._density = Fraction(int(membership.sum()), ctx.size)

    @classmethod
    def from_predicate(cls, ctx: VectorSpaceCtx, pred) -> "GSubset":
        coords = ctx.index_to_coords(np.arange(ctx.size))
        memb = np.fromiter(
            (1 if pred(tuple(int(c) for c in row)) else 0 for row in coords),
            dtype=np.uint8,
            count=ctx.size,
        )
        return cls(ctx, memb)

    @classmethod
    def from_indices(cls, ctx: VectorSpaceCtx, indices) -> "GSubset":
        memb = np.zeros(ctx.size, dtype=np.uint8)
        memb[np.asarray(indices, dtype=np.int64)] = 1
        return cls(ctx, memb)

    @classmethod
    def empty(cls, ctx: VectorSpaceCtx) -> "GSubset":
        return cls(ctx, np.zeros(ctx.size, dtype=np.uint8))

    @classmethod
    def full(cls, ctx: VectorSpaceCtx) -> "GSubset":
        return cls(ctx, np.ones(ctx.size, dtype=np.uint8))

    @property
    def density(self) -> Fraction:
        return self._density

    def __len__(self) -> int:
        return int(self._density * self.ctx.size)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.membership).astype(np.int64)

    def contains_index(self, idx: int) -> bool:
        return bool(self.membership[idx])

    def complement(self) -> "GSubset":
        return GSubset(self.ctx, 1 - self.membership)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GSubset)
            and self.ctx == other.ctx
            and np.array_equal(self.membership, other.membership)
        )

    def __hash__(self):
        return hash((self.ctx, self.membership.tobytes()))

    def to_bytes(self) -> bytes:
        packed = np.packbits(self.membership, bitorder="little").tobytes()
        header = SET_MAGIC + struct.pack("<IIQ", self.ctx.p, self.ctx.n, len(self))
        return header + packed

    @classmethod
    def from_bytes(cls, payload: bytes) -> "GSubset":
        if len(payload) < 8 + 16:
            raise SetFormatError("payload shorter than the fixed header")
        if payload[:8] != SET_MAGIC:
            raise SetFormatError("bad magic")
        p, n, popcount = struct.unpack("<IIQ", payload[8:24])
        if p < 3 or not is_prime(p):
            raise SetFormatError(f"p = {p} is not an odd prime")
        if n < 1 or p ** n > MAX_SIZE:
            raise SetFormatError(f"p^n overflow (p={p}, n={n})")
        ctx = VectorSpaceCtx(p, n)
        nbytes = (ctx.size + 7) // 8
        bits = payload[24:24 + nbytes]
        if len(bits) < nbytes:
            raise SetFormatError("truncated bitset")
        memb = np.unpackbits(
            np.frombuffer(bits, dtype=np.uint8), bitorder="little", count=ctx.size
        )
        subset = cls(ctx, memb)
        if len(subset) != popcount:
            raise SetFormatError(
                f"popcount mismatch: header says {popcount}, bitset has {len(subset)}"
            )
        return subset

    def write(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def read(cls, path) -> "GSubset":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def subset_from_predicate(ctx: VectorSpaceCtx, pred) -> GSubset:
    return GSubset.from_predicate(ctx, pred)


def write_set(path, subset: GSubset):
    subset.write(path)


def read_set(path) -> GSubset:
    return GSubset.read(path)
