"""Benchmark the compiled kernel backend against the pure numpy fallback.

Times the hot kernels (radix-p transform batches, shift permutations, the
pair-spectrum census scan, and the naive census loops) and prints a table
plus machine-readable JSON.

Usage: python benchmarks/bench_kernels.py [--n 8] [--repeat 3]
"""

import argparse
import json
import time

import numpy as np

from quadvar import _kernels
from quadvar._kernels import fallback
from quadvar.group import GSubset, VectorSpaceCtx
from quadvar.generators import gen_random

try:
    from quadvar._kernels import _core as compiled
except ImportError:
    compiled = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(impl, p, n, repeat):
    size = p ** n
    rng = np.random.default_rng(0)
    rows = 64
    data = (rng.standard_normal((rows, size))
            + 1j * rng.standard_normal((rows, size)))
    w = _kernels.root_table(p, -1)
    out = {}

    buf = data.copy()
    out["dft_batch64"] = _time(lambda: impl.dft_many(buf, p, n, w), repeat)

    perm = np.empty(size, dtype=np.int64)
    out["shift_perm"] = _time(lambda: impl.shift_perm(perm, p, n, size // 2),
                              repeat)

    memb = (rng.random(size) < 0.5).astype(np.uint8)
    ctab = np.empty(size, dtype=np.complex128)
    out["pair_table"] = _time(lambda: impl.pair_table(ctab, memb, perm), repeat)

    if size <= 3 ** 5:
        ctx = VectorSpaceCtx(p, n)
        add, sub = ctx.add_table(), ctx.sub_table()
        out["quadruple_naive"] = _time(
            lambda: impl.quadruple_naive(memb, add, sub), repeat)
        out["cube_naive"] = _time(lambda: impl.cube_naive(memb, add, sub),
                                  max(1, repeat - 1))
    return out


def bench_scan(p, n, repeat):
    """The end-to-end cube census, whichever backend is active."""
    from quadvar.counting import cube_count
    ctx = VectorSpaceCtx(p, n)
    V = gen_random(ctx, 1 / 3, seed=1)
    return _time(lambda: cube_count(V), max(1, repeat - 1))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    results = {"active_backend": _kernels.BACKEND, "p": args.p, "n": args.n}
    results["fallback"] = bench_backend(fallback, args.p, args.n, args.repeat)
    if compiled is not None:
        results["compiled"] = bench_backend(compiled, args.p, args.n, args.repeat)
    results["cube_count_active"] = bench_scan(args.p, args.n, args.repeat)

    width = max(len(k) for k in results["fallback"])
    print(f"kernel benchmark at p={args.p}, n={args.n} "
          f"(|G| = {args.p ** args.n}), best of {args.repeat}")
    header = f"{'kernel':<{width}}  {'fallback':>12}"
    if compiled is not None:
        header += f"  {'compiled':>12}  {'speized':>8}"
    print(header.replace("speized", "speedup"))
    for key, fb in results["fallback"].items():
        line = f"{key:<{width}}  {fb * 1e3:>10.2f}ms"
        if compiled is not None and key in results.get("compiled", {}):
            cp = results["compiled"][key]
            line += f"  {cp * 1e3:>10.2f}ms  {fb / cp:>7.1f}x"
        print(line)
    print(f"cube census (|G|={args.p ** args.n}, active backend): "
          f"{results['cube_count_active']:.3f}s")
    print(json.dumps(results, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
