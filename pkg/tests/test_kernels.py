"""Backend parity: the compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from quadvar import _kernels
from quadvar._kernels import fallback

try:
    from quadvar._kernels import _core
except ImportError:
    _core = None

pytestmark = pytest.mark.skipif(_core is None,
                                reason="compiled kernels unavailable")


def test_backend_is_compiled():
    assert _kernels.BACKEND == "compiled"


@pytest.mark.parametrize("p,n", [(3, 2), (3, 5), (3, 8), (5, 3), (7, 2)])
def test_dft_parity(p, n):
    rng = np.random.default_rng(0)
    size = p ** n
    data = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    for sign in (-1, 1):
        w = _kernels.root_table(p, sign)
        a = np.array([data]);  _core.dft_many(a, p, n, w)
        b = np.array([data]);  fallback.dft_many(b, p, n, w)
        assert np.allclose(a, b, atol=1e-9)


@pytest.mark.parametrize("p,n", [(3, 4), (5, 3)])
def test_shift_perm_and_index_add_parity(p, n):
    size = p ** n
    for c in (0, 1, size // 2, size - 1):
        a = np.empty(size, dtype=np.int64); _core.shift_perm(a, p, n, c)
        b = np.empty(size, dtype=np.int64); fallback.shift_perm(b, p, n, c)
        assert np.array_equal(a, b)
        arr = np.arange(0, size, 7, dtype=np.int64)
        x = np.empty(arr.size, dtype=np.int64); _core.index_add(x, arr, c, p, n)
        y = np.empty(arr.size, dtype=np.int64); fallback.index_add(y, arr, c, p, n)
        assert np.array_equal(x, y)


def test_tables_parity():
    rng = np.random.default_rng(1)
    p, n = 3, 4
    size = p ** n
    memb = (rng.random(size) < 0.5).astype(np.uint8)
    perm = _kernels.shift_perm(p, n, 5)
    a = np.empty(size, dtype=np.complex128); _core.pair_table(a, memb, perm)
    b = np.empty(size, dtype=np.complex128); fallback.pair_table(b, memb, perm)
    assert np.array_equal(a, b)
    pu, pv, pw = (_kernels.shift_perm(p, n, c) for c in (3, 11, 60))
    x = np.empty(size, dtype=np.complex128)
    _core.product_table(x, memb, pu, pv, pw)
    y = np.empty(size, dtype=np.complex128)
    fallback.product_table(y, memb, pu, pv, pw)
    assert np.array_equal(x, y)


def test_census_oracle_parity():
    from quadvar.group import GSubset, VectorSpaceCtx
    rng = np.random.default_rng(2)
    ctx = VectorSpaceCtx(3, 3)
    memb = (rng.random(27) < 0.5).astype(np.uint8)
    add, sub = ctx.add_table(), ctx.sub_table()
    assert _core.quadruple_naive(memb, add, sub) == \
        fallback.quadruple_naive(memb, add, sub)
    assert _core.cube_naive(memb, add, sub) == \
        fallback.cube_naive(memb, add, sub)
    assert _core.config10_naive(memb, add, sub) == \
        fallback.config10_naive(memb, add, sub)


def test_hist4_parity():
    from quadvar.group import VectorSpaceCtx
    rng = np.random.default_rng(3)
    ctx = VectorSpaceCtx(3, 3)
    sub = ctx.sub_table()
    supp = np.sort(rng.choice(27, size=9, replace=False)).astype(np.int64)
    for bound in (0.5, 2.0, 5.0):
        assert _core.hist4_exceed(supp, sub, 27, bound) == \
            fallback.hist4_exceed(supp, sub, 27, bound)
