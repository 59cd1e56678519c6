"""
Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each kernel is called once untimed so numba compilation is excluded, and the
two paths are checked for equal output before timing.
"""

import argparse
import time

import numpy as np

from rdsgraphon.cutnorm import gray_max_numba, gray_max_numpy
from rdsgraphon.graphon import BlockGraphon, ProductGraphon
from rdsgraphon.oracles import _pairs, discretize, taboo_numba, taboo_numpy
from rdsgraphon.sampler import _block_chain, _grid_chain, walk_numba, walk_numpy


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(quick):
    rng = np.random.default_rng(0)
    for n in ((12, 16) if quick else (16, 20, 22)):
        D = rng.normal(size=(n, n))
        yield f"gray-code cut norm n={n}", (gray_max_numba, gray_max_numpy), (D + D.T,)

    block = _block_chain(BlockGraphon([0.0, 0.5, 1.0], [[2.0, 1.0], [1.0, 3.0]]))
    grid = _grid_chain(ProductGraphon(1.0, 1.0), 1024)
    N = 10 ** 5 if quick else 10 ** 6
    for name, chain in (("block", block), ("grid m=1024", grid)):
        args = (chain.cuts, chain.cum_init, chain.cum_P, rng.random(N + 1), rng.random(N + 1))
        yield f"chain walk {name} N={N}", (walk_numba, walk_numpy), args

    for n, mult, N in ((8, 2, 200), (16, 2, 500)) if not quick else ((8, 1, 200),):
        chain = discretize(BlockGraphon([0.0, 0.5, 1.0], [[2.0, 1.0], [1.0, 3.0]]), n * mult)
        args = (chain.P, chain.pi, mult, _pairs(n).astype(np.int64), N)
        yield f"taboo survival n={n} m={n * mult} N={N}", (taboo_numba, taboo_numpy), args


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = p.parse_args(argv)

    print(f"{'kernel':<40} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for label, (fast, slow), call_args in cases(args.quick):
        a, b = fast(*call_args), slow(*call_args)
        if not np.allclose(np.asarray(a[0] if isinstance(a, tuple) else a),
                           np.asarray(b[0] if isinstance(b, tuple) else b), atol=1e-10):
            raise SystemExit(f"{label}: numba and numpy outputs differ")
        t_fast = best_of(lambda: fast(*call_args), args.repeat)
        t_slow = best_of(lambda: slow(*call_args), args.repeat)
        print(f"{label:<40} {t_fast:>10.4f} {t_slow:>10.4f} {t_slow / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
