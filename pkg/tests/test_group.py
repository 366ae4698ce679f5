import numpy as np
import pytest

from quadvar.group import (GSubset, SetFormatError, VectorSpaceCtx,
                           element_add, element_neg, element_scale,
                           subset_from_predicate)


def test_ctx_validation():
    VectorSpaceCtx(3, 1)
    VectorSpaceCtx(7, 3)
    with pytest.raises(ValueError):
        VectorSpaceCtx(2, 4)  # p = 2 excluded
    with pytest.raises(ValueError):
        VectorSpaceCtx(9, 2)  # not prime
    with pytest.raises(ValueError):
        VectorSpaceCtx(3, 0)
    with pytest.raises(ValueError):
        VectorSpaceCtx(3, 21)  # 3^21 > 2^31


def test_element_arithmetic_examples():
    ctx = VectorSpaceCtx(3, 2)
    x = ctx.element([1, 2])
    y = ctx.element([2, 2])
    assert (x + y).coords == (0, 1)
    assert element_add(x, ctx.zero()).coords == x.coords
    # additive order p: (p-1).x + x = 0
    assert element_add(element_scale(x, 2), x).coords == (0, 0)
    assert element_neg(x).coords == (2, 1)


def test_element_context_mismatch():
    a = VectorSpaceCtx(3, 2).element([1, 1])
    b = VectorSpaceCtx(3, 3).element([1, 1, 1])
    with pytest.raises(ValueError):
        _ = a + b


def test_index_coords_round_trip():
    rng = np.random.default_rng(0)
    for p, n in [(3, 4), (5, 3), (7, 2)]:
        ctx = VectorSpaceCtx(p, n)
        idx = rng.integers(0, ctx.size, size=200)
        back = ctx.coords_to_index(ctx.index_to_coords(idx))
        assert np.array_equal(back, idx)


def test_encode_and_arithmetic_commute():
    """index(x + y) via coords equals digitwise index addition."""
    rng = np.random.default_rng(1)
    ctx = VectorSpaceCtx(5, 3)
    for _ in range(100):
        i, j = rng.integers(0, ctx.size, size=2)
        x = ctx.element_from_index(int(i))
        y = ctx.element_from_index(int(j))
        summed = (ctx.index_to_coords(int(i)) + ctx.index_to_coords(int(j))) % 5
        assert (x + y).canonical_index == int(ctx.coords_to_index(summed))


def test_subset_from_predicate_examples():
    ctx = VectorSpaceCtx(3, 2)
    assert subset_from_predicate(ctx, lambda c: True).density == 1
    assert subset_from_predicate(ctx, lambda c: False).density == 0
    first0 = subset_from_predicate(ctx, lambda c: c[0] == 0)
    assert first0.density == pytest.approx(1 / 3)
    assert first0.density.denominator == 3


def test_complement_density():
    ctx = VectorSpaceCtx(3, 3)
    rng = np.random.default_rng(2)
    V = GSubset(ctx, (rng.random(27) < 0.4).astype(np.uint8))
    assert V.complement().density == 1 - V.density


def test_io_round_trip_random():
    rng = np.random.default_rng(3)
    for p, n in [(3, 3), (5, 2), (3, 5)]:
        ctx = VectorSpaceCtx(p, n)
        V = GSubset(ctx, (rng.random(ctx.size) < 0.5).astype(np.uint8))
        assert GSubset.from_bytes(V.to_bytes()) == V


def test_io_file_round_trip(tmp_path):
    ctx = VectorSpaceCtx(3, 4)
    V = GSubset.from_indices(ctx, [0, 5, 17, 80])
    path = tmp_path / "v.fpnset"
    V.write(path)
    assert GSubset.read(path) == V


def test_io_empty_set_payload():
    ctx = VectorSpaceCtx(3, 1)
    raw = GSubset.empty(ctx).to_bytes()
    assert raw[:8] == b"FPNSET1\x00"
    payload = raw[24:]
    assert payload == b"\x00"


def test_io_full_set_payload():
    ctx = VectorSpaceCtx(3, 2)
    raw = GSubset.full(ctx).to_bytes()
    assert raw[24:] == bytes([0xFF, 0x01])


def test_io_errors():
    ctx = VectorSpaceCtx(3, 2)
    good = GSubset.full(ctx).to_bytes()
    with pytest.raises(SetFormatError, match="magic"):
        GSubset.from_bytes(b"X" + good[1:])
    bad_p = bytearray(good)
    bad_p[8] = 4  # p = 4, not prime
    with pytest.raises(SetFormatError, match="prime"):
        GSubset.from_bytes(bytes(bad_p))
    overflow = bytearray(good)
    overflow[12] = 40  # n = 40: 3^40 overflows the size cap
    with pytest.raises(SetFormatError, match="overflow"):
        GSubset.from_bytes(bytes(overflow))
    with pytest.raises(SetFormatError, match="truncated"):
        GSubset.from_bytes(good[:-1])
    bad_count = bytearray(good)
    bad_count[16] = 3
    with pytest.raises(SetFormatError, match="popcount"):
        GSubset.from_bytes(bytes(bad_count))
