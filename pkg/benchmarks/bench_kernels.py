"""Benchmark the compiled isotonic-projection kernel against the numpy
fallback.

The compiled extension and the pure path share one dispatch module, so
the comparison imports the fallback directly and times both on the same
inputs. Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 64 1024 16384 --batch 512
"""

import argparse
import time

import numpy as np

from patternlab import _kernels_py, kernels


def _time(fn, arg, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(arg)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[16, 256, 4096, 65536])
    parser.add_argument("--batch", type=int, default=256,
                        help="rows for the batched projection")
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if kernels.BACKEND != "cython":
        print("compiled extension not loaded (BACKEND = "
              f"{kernels.BACKEND!r}); timing the fallback against itself")
    rng = np.random.default_rng(args.seed)

    print(f"{'p':>8} {'compiled':>12} {'pure':>12} {'speedup':>8}")
    for p in args.sizes:
        z = rng.standard_normal(p)
        out_fast = kernels.pava_decreasing(z)
        out_py = _kernels_py.pava_decreasing(z)
        np.testing.assert_allclose(out_fast, out_py, atol=1e-12)
        t_fast = _time(kernels.pava_decreasing, z, args.repeats)
        t_py = _time(_kernels_py.pava_decreasing, z, args.repeats)
        print(f"{p:>8} {t_fast * 1e6:>10.1f}us {t_py * 1e6:>10.1f}us "
              f"{t_py / t_fast:>7.1f}x")

    print(f"\nbatched ({args.batch} rows):")
    print(f"{'p':>8} {'compiled':>12} {'pure':>12} {'speedup':>8}")
    for p in args.sizes:
        Z = rng.standard_normal((args.batch, p))
        np.testing.assert_allclose(kernels.pava_decreasing_batch(Z),
                                   _kernels_py.pava_decreasing_batch(Z),
                                   atol=1e-12)
        t_fast = _time(kernels.pava_decreasing_batch, Z, max(3, args.repeats // 4))
        t_py = _time(_kernels_py.pava_decreasing_batch, Z, max(3, args.repeats // 4))
        print(f"{p:>8} {t_fast * 1e3:>10.2f}ms {t_py * 1e3:>10.2f}ms "
              f"{t_py / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
