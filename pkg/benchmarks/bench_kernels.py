"""Time the Cython kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 200x20 2000x50 10000x100]

Each size is ``NxM`` (data rows x inducing points); inputs are 3-D. Reports
the best-of-``repeat`` wall time per call, the speedup and the largest
absolute difference between the two results.
"""
import argparse
import sys
import timeit

import numpy as np

from memmap import _kernels_py

try:
    from memmap import _kernels
except ImportError:
    _kernels = None


def bench(fn, args, repeat):
    number = 1
    t = timeit.Timer(lambda: fn(*args))
    # grow the loop count until one sample takes ~50 ms
    while min(t.repeat(1, number)) < 0.05 and number < 10_000:
        number *= 4
    return min(t.repeat(repeat, number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", nargs="+", default=["200x20", "2000x50", "10000x100"])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 1

    rng = np.random.default_rng(args.seed)
    w = np.array([1.0, 4.0, 0.5])
    print(f"{'kernel':<6} {'N x M':>11} {'cython':>11} {'numpy':>11} {'speedup':>8} {'max diff':>9}")
    for size in args.sizes:
        N, M = (int(v) for v in size.lower().split("x"))
        X = rng.uniform(0, 1, (N, 3))
        a = rng.uniform(0, 1, (M, 3))
        cases = {
            "gram": (X, a, 1.0, w),
            "psi": (X, a, 1.0, 0.01, w),
            "phi": (X, a, 1.0, 0.01, w),
        }
        for name, fargs in cases.items():
            fast, slow = getattr(_kernels, name), getattr(_kernels_py, name)
            diff = float(np.abs(np.asarray(fast(*fargs)) - slow(*fargs)).max())
            tf, ts = bench(fast, fargs, args.repeat), bench(slow, fargs, args.repeat)
            print(f"{name:<6} {size:>11} {tf * 1e3:>9.3f}ms {ts * 1e3:>9.3f}ms "
                  f"{ts / tf:>7.1f}x {diff:>9.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
