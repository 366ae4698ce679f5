"""Pure numpy implementations of the hot kernels.

Selected at import time when the compiled extension is unavailable (or when
QUADVAR_PURE is set). Function signatures and semantics mirror _core.
"""

import numpy as np

IMPL = "fallback"


def dft_many(data, p, n, wtab):
    """In-place unnormalized transform of each row with the given root table."""
    wtab = np.asarray(wtab)
    W = wtab[np.multiply.outer(np.arange(p), np.arange(p)) % p]
    rows, size = data.shape
    t = data.reshape((rows,) + (p,) * n)
    for ax in range(1, n + 1):
        t = np.moveaxis(np.tensordot(W, t, axes=([1], [ax])), 0, ax)
    data[:] = t.reshape(rows, size)


def shift_perm(out, p, n, c):
    """out[x] = canonical index of x + c (digitwise mod-p addition)."""
    size = out.shape[0]
    idx = np.arange(size, dtype=np.int64)
    acc = np.zeros(size, dtype=np.int64)
    pw = 1
    for k in range(n):
        ck = (c // pw) % p
        acc += (((idx // pw) % p + ck) % p) * pw
        pw *= p
    out[:] = acc


def index_add(out, arr, c, p, n):
    """out[i] = canonical index of arr[i] + c."""
    arr = np.asarray(arr, dtype=np.int64)
    acc = np.zeros(arr.shape, dtype=np.int64)
    pw = 1
    for _ in range(n):
        ck = (c // pw) % p
        acc += (((arr // pw) % p + ck) % p) * pw
        pw *= p
    out[:] = acc


def pair_table(out, memb, perm):
    memb = np.asarray(memb)
    out[:] = memb * memb[np.asarray(perm)]


def product_table(out, memb, pu, pv, pw):
    memb = np.asarray(memb)
    out[:] = memb * memb[np.asarray(pu)] * memb[np.asarray(pv)] * memb[np.asarray(pw)]


def quadruple_naive(memb, add, sub):
    """Naive census of (x, y, z, w) in A^4 with x + y = z + w."""
    memb = np.asarray(memb, dtype=bool)
    add = np.asarray(add)
    sub = np.asarray(sub)
    members = np.flatnonzero(memb)
    count = 0
    for x in members:
        sums = add[x, members]
        count += int(memb[sub[np.ix_(sums, members)]].sum())
    return count


def cube_naive(memb, add, sub):
    """Naive census of additive cubes.

    Same enumeration as four nested loops over (x, a, b, c), grouped by the
    shift a: each group is a parallelogram census inside V ∩ (V - a).
    """
    memb = np.asarray(memb, dtype=bool)
    add = np.asarray(add)
    sub = np.asarray(sub)
    size = memb.shape[0]
    count = 0
    for a in range(size):
        pair = memb & memb[add[:, a]]
        members = np.flatnonzero(pair)
        if members.size == 0:
            continue
        sums = add[np.ix_(members, members)]  # y + z over the pair set
        for x in members:
            count += int(pair[sub[sums, x]].sum())
    return count


def config10_naive(memb, add, sub):
    """Naive census of 6-tuples whose ten derived points all lie in A."""
    memb = np.asarray(memb, dtype=bool)
    add = np.asarray(add)
    sub = np.asarray(sub)
    members = np.flatnonzero(memb)
    count = 0
    for b1 in members:
        for b2 in members:
            b12 = add[b1, b2]
            for b3 in members:
                if not memb[sub[b12, b3]]:
                    continue
                nx = int((memb & memb[add[:, sub[b3, b2]]]).sum())
                ny = int((memb & memb[add[:, sub[b1, b3]]]).sum())
                nz = int((memb & memb[sub[b12, :]]).sum())
                count += nx * ny * nz
    return count


def hist4_exceed(supp, sub, size, bound):
    """Count shift triples (u, v, w) whose 4-point pattern count exceeds bound."""
    supp = np.asarray(supp)
    sub = np.asarray(sub)
    m = supp.shape[0]
    if m == 0:
        return 0
    hist = np.zeros(size * size * size, dtype=np.int64)
    diffs = sub[np.ix_(supp, supp)].astype(np.int64)  # diffs[j, i] = supp[j] - supp[i]
    for i in range(m):
        u = diffs[:, i]
        uv = (u[:, None] * size + u[None, :]).ravel()
        flat = (uv[:, None] * size + u[None, :]).ravel()
        np.add.at(hist, flat, 1)
    return int((hist > bound).sum())
