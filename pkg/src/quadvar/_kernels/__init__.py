"""Kernel backend: compiled extension when available, numpy fallback otherwise.

Set QUADVAR_PURE=1 to force the fallback. The active backend name is exposed
as BACKEND and echoed by the CLI. Wrappers here own normalization, scratch
allocation, and the thread pool; backends only provide the inner loops.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np

if os.environ.get("QUADVAR_PURE"):
    from . import fallback as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import fallback as _impl

BACKEND = _impl.IMPL

_num_threads = 0  # 0 = auto


def set_num_threads(t):
    global _num_threads
    _num_threads = max(0, int(t))


def effective_threads():
    if _num_threads > 0:
        return _num_threads
    return min(8, os.cpu_count() or 1)


@lru_cache(maxsize=None)
def root_table(p, sign):
    """Length-p table of exp(sign * 2*pi*i * k / p)."""
    w = np.exp(sign * 2j * np.pi * np.arange(p) / p)
    w.setflags(write=False)
    return w


def dft(values, p, n, sign):
    """Unnormalized transform of one table; returns a new complex array."""
    out = np.array(values, dtype=np.complex128, copy=True).reshape(1, -1)
    _impl.dft_many(out, p, n, root_table(p, sign))
    return out[0]


def dft_batch_inplace(data, p, n, sign, threads=None):
    """Unnormalized in-place transform of each row, threaded over row chunks."""
    rows = data.shape[0]
    t = threads if threads is not None else effective_threads()
    w = root_table(p, sign)
    if t <= 1 or rows < 2 * t:
        _impl.dft_many(data, p, n, w)
        return
    bounds = np.linspace(0, rows, t + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=t) as ex:
        futs = [
            ex.submit(_impl.dft_many, data[lo:hi], p, n, w)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for f in futs:
            f.result()
    return


def shift_perm(p, n, c):
    """Permutation array perm[x] = index of x + c."""
    out = np.empty(p ** n, dtype=np.int64)
    _impl.shift_perm(out, p, n, int(c))
    return out


def index_add(arr, c, p, n):
    """Canonical indices of arr + c (digitwise mod-p addition)."""
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    out = np.empty(arr.shape[0], dtype=np.int64)
    _impl.index_add(out, arr, int(c), p, n)
    return out


def pair_table(memb, perm):
    """Complex table h(x) = memb(x) * memb(x + c) given the shift permutation."""
    out = np.empty(memb.shape[0], dtype=np.complex128)
    _impl.pair_table(out, memb, perm)
    return out


def product_table(memb, pu, pv, pw):
    """Complex table memb(x) memb(x+u) memb(x+v) memb(x+w)."""
    out = np.empty(memb.shape[0], dtype=np.complex128)
    _impl.product_table(out, memb, pu, pv, pw)
    return out


def quadruple_naive(memb, add, sub):
    return int(_impl.quadruple_naive(memb, add, sub))


def cube_naive(memb, add, sub):
    return int(_impl.cube_naive(memb, add, sub))


def config10_naive(memb, add, sub):
    return int(_impl.config10_naive(memb, add, sub))


def hist4_exceed(supp, sub, size, bound):
    return int(_impl.hist4_exceed(supp, sub, size, float(bound)))


def parallel_map_ordered(work, n_items, threads=None):
    """Run work(lo, hi) over contiguous chunks; return results in chunk order."""
    t = threads if threads is not None else effective_threads()
    if t <= 1 or n_items < 2 * t:
        return [work(0, n_items)]
    bounds = np.linspace(0, n_items, t + 1, dtype=int)
    ranges = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ThreadPoolExecutor(max_workers=t) as ex:
        futs = [ex.submit(work, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futs]
