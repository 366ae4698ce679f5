# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: radix-p transforms, shift permutations, census loops.

All loops release the GIL so the Python-level thread pool gets real
parallelism. Tables are indexed by the little-endian base-p canonical
index (digit 0 varies fastest).
"""

from libc.stdint cimport int32_t, int64_t, uint8_t, uint16_t
from libc.stdlib cimport calloc, free
from libc.string cimport memset

IMPL = "compiled"


cdef void _dft1(double complex* d, Py_ssize_t size, int p, int n,
                const double complex* w, double complex* tmp) noexcept nogil:
    # Unnormalized dimension-by-dimension transform:
    # out[r] = sum_x d[x] * w[(r_k * x_k) mod p] over every digit k.
    cdef Py_ssize_t stride = 1, pstride, outer, inner, base
    cdef int k, i, j
    cdef double complex acc
    for k in range(n):
        pstride = stride * p
        outer = 0
        while outer < size:
            for inner in range(stride):
                base = outer + inner
                for j in range(p):
                    tmp[j] = d[base + j * stride]
                for i in range(p):
                    acc = 0
                    for j in range(p):
                        acc = acc + w[(i * j) % p] * tmp[j]
                    d[base + i * stride] = acc
            outer += pstride
        stride = pstride


cdef void _dft1_radix3(double complex* d, Py_ssize_t size, int n,
                       double s) noexcept nogil:
    # Radix-3 butterflies: the cube roots of unity are -1/2 +- i sqrt(3)/2,
    # so w1 t1 + w2 t2 = -(t1 + t2)/2 + i s (t1 - t2) with s = +-sqrt(3)/2.
    cdef Py_ssize_t stride = 1, pstride, outer, inner, base
    cdef int k
    cdef double complex t0, t1, t2, su, a, jd
    for k in range(n):
        pstride = stride * 3
        outer = 0
        while outer < size:
            for inner in range(stride):
                base = outer + inner
                t0 = d[base]
                t1 = d[base + stride]
                t2 = d[base + 2 * stride]
                su = t1 + t2
                a = t0 - 0.5 * su
                jd = 1j * (s * (t1 - t2))
                d[base] = t0 + su
                d[base + stride] = a + jd
                d[base + 2 * stride] = a - jd
            outer += pstride
        stride = pstride


def dft_many(double complex[:, ::1] data, int p, int n,
             const double complex[::1] wtab):
    """In-place unnormalized transform of each row with the given root table."""
    cdef Py_ssize_t rows = data.shape[0], size = data.shape[1], r
    cdef double s
    cdef double complex* tmp
    if p == 3:
        s = wtab[1].imag
        with nogil:
            for r in range(rows):
                _dft1_radix3(&data[r, 0], size, n, s)
        return
    tmp = <double complex*> calloc(p, sizeof(double complex))
    if tmp == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(rows):
                _dft1(&data[r, 0], size, p, n, &wtab[0], tmp)
    finally:
        free(tmp)


def shift_perm(int64_t[::1] out, int p, int n, int64_t c):
    """out[x] = canonical index of x + c (digitwise mod-p addition, no carries).

    Odometer walk: incrementing digit k of x moves the shifted digit
    (x_k + c_k) mod p up by one, wrapping exactly when x_k + c_k + 1 == p;
    the same rule covers the carry transition x_k: p-1 -> 0.
    """
    cdef Py_ssize_t size = out.shape[0], x
    cdef int64_t shifted = 0, pw, rem
    cdef int k
    cdef int64_t* xd = <int64_t*> calloc(n, sizeof(int64_t))
    cdef int64_t* cd = <int64_t*> calloc(n, sizeof(int64_t))
    cdef int64_t* pws = <int64_t*> calloc(n, sizeof(int64_t))
    if xd == NULL or cd == NULL or pws == NULL:
        free(xd); free(cd); free(pws)
        raise MemoryError()
    try:
        with nogil:
            pw = 1
            rem = c
            for k in range(n):
                pws[k] = pw
                cd[k] = rem % p
                rem = rem / p
                shifted += cd[k] * pw
                pw *= p
            for x in range(size):
                out[x] = shifted
                for k in range(n):
                    xd[k] += 1
                    if cd[k] + xd[k] == p:
                        shifted -= (p - 1) * pws[k]
                    else:
                        shifted += pws[k]
                    if xd[k] < p:
                        break
                    xd[k] = 0
    finally:
        free(xd)
        free(cd)
        free(pws)


def index_add(int64_t[::1] out, const int64_t[::1] arr, int64_t c, int p, int n):
    """out[i] = canonical index of arr[i] + c."""
    cdef Py_ssize_t m = arr.shape[0], i
    cdef int k
    cdef int64_t x, res, pw, xd, cd, rem
    cdef int64_t cds[64]
    cdef int64_t pws[64]
    rem = c
    pw = 1
    for k in range(n):
        pws[k] = pw
        cds[k] = rem % p
        rem = rem / p
        pw *= p
    with nogil:
        for i in range(m):
            x = arr[i]
            res = 0
            for k in range(n):
                xd = (x / pws[k]) % p
                res += ((xd + cds[k]) % p) * pws[k]
            out[i] = res


def pair_table(double complex[::1] out, const uint8_t[::1] memb,
               const int64_t[::1] perm):
    """out[x] = memb[x] * memb[x + c] as a complex table ready for the DFT."""
    cdef Py_ssize_t size = out.shape[0], x
    with nogil:
        for x in range(size):
            out[x] = memb[x] * memb[perm[x]]


def product_table(double complex[::1] out, const uint8_t[::1] memb,
                  const int64_t[::1] pu, const int64_t[::1] pv,
                  const int64_t[::1] pw):
    """out[x] = memb[x]*memb[x+u]*memb[x+v]*memb[x+w] for a sampled triple."""
    cdef Py_ssize_t size = out.shape[0], x
    with nogil:
        for x in range(size):
            out[x] = memb[x] * memb[pu[x]] * memb[pv[x]] * memb[pw[x]]


def quadruple_naive(const uint8_t[::1] memb, const int32_t[:, ::1] add,
                    const int32_t[:, ::1] sub):
    """Naive census of (x, y, z, w) in A^4 with x + y = z + w."""
    cdef Py_ssize_t size = memb.shape[0], x, y, z
    cdef int64_t count = 0
    cdef int32_t s
    with nogil:
        for x in range(size):
            if not memb[x]:
                continue
            for y in range(size):
                if not memb[y]:
                    continue
                s = add[x, y]
                for z in range(size):
                    if memb[z] and memb[sub[s, z]]:
                        count += 1
    return count


def cube_naive(const uint8_t[::1] memb, const int32_t[:, ::1] add,
               const int32_t[:, ::1] sub):
    """Naive census of (x, a, b, c) whose eight cube points all lie in V."""
    cdef Py_ssize_t size = memb.shape[0], x, a, b, c
    cdef int64_t count = 0
    cdef int32_t xa, xb, xab
    with nogil:
        for x in range(size):
            if not memb[x]:
                continue
            for a in range(size):
                xa = add[x, a]
                if not memb[xa]:
                    continue
                for b in range(size):
                    xb = add[x, b]
                    if not memb[xb]:
                        continue
                    xab = add[xa, b]
                    if not memb[xab]:
                        continue
                    for c in range(size):
                        if (memb[add[x, c]] and memb[add[xa, c]]
                                and memb[add[xb, c]] and memb[add[xab, c]]):
                            count += 1
    return count


def config10_naive(const uint8_t[::1] memb, const int32_t[:, ::1] add,
                   const int32_t[:, ::1] sub):
    """Naive census of 6-tuples whose ten derived points all lie in A.

    For fixed (b1, b2, b3) the free points x2, y3, z1 are enumerated
    independently, which is the same enumeration as six nested loops.
    """
    cdef Py_ssize_t size = memb.shape[0], b1, b2, b3, t
    cdef int64_t count = 0, nx, ny, nz
    cdef int32_t b12, a, d_x, d_y
    with nogil:
        for b1 in range(size):
            if not memb[b1]:
                continue
            for b2 in range(size):
                if not memb[b2]:
                    continue
                b12 = add[b1, b2]
                for b3 in range(size):
                    if not memb[b3]:
                        continue
                    a = sub[b12, b3]
                    if not memb[a]:
                        continue
                    d_x = sub[b3, b2]
                    d_y = sub[b1, b3]
                    nx = 0
                    ny = 0
                    nz = 0
                    for t in range(size):
                        if memb[t]:
                            if memb[add[t, d_x]]:
                                nx += 1
                            if memb[add[t, d_y]]:
                                ny += 1
                            if memb[sub[b12, t]]:
                                nz += 1
                    count += nx * ny * nz
    return count


def hist4_exceed(const int64_t[::1] supp, const int32_t[:, ::1] sub,
                 Py_ssize_t size, double bound):
    """Count shift triples (u, v, w) whose 4-point pattern count exceeds bound.

    Enumerates quadruples of support points of a pair table h and histograms
    the shift pattern; the result is the number of (u, v, w) with
    #{x : h(x)h(x+u)h(x+v)h(x+w) = 1} > bound.
    """
    cdef Py_ssize_t m = supp.shape[0], i, j, k, l, total, idx
    cdef int64_t x, u, v
    cdef int64_t violations = 0
    cdef uint16_t* hist
    total = size * size * size
    hist = <uint16_t*> calloc(total, sizeof(uint16_t))
    if hist == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                x = supp[i]
                for j in range(m):
                    u = sub[supp[j], x]
                    for k in range(m):
                        v = sub[supp[k], x]
                        for l in range(m):
                            idx = (u * size + v) * size + sub[supp[l], x]
                            hist[idx] += 1
            for idx in range(total):
                if hist[idx] > bound:
                    violations += 1
    finally:
        free(hist)
    return violations
