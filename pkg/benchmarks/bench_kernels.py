"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from iocc_das import _kernels as K


def cases(rng):
    pts = rng.uniform(0, 500, size=(5000, 2))
    ctr = rng.uniform(0, 500, size=(8, 2))
    data = rng.normal(size=(5000, 3))
    gain = rng.uniform(0.1, 10.0, size=8)
    s = rng.lognormal(size=(20_000, 8))
    g = rng.exponential(size=(20_000, 8))
    mat = rng.uniform(0.1, 2.0, size=(750, 8))
    tgt = rng.uniform(1.0, 30.0, size=750)
    gram, lin = mat.T @ mat, mat.T @ tgt
    lo = np.full(8, 1e-12)
    return {
        "clamped_gain 5000x8": lambda: K.clamped_gain(pts, ctr, 4.0, 5.0),
        "nearest_center 5000x8": lambda: K.nearest_center(data, data[:8]),
        "capacity_stats 20000x8": lambda: K.capacity_stats(gain, s, g),
        "project_box_budget k=8": lambda: K.project_box_budget(rng.normal(size=8), lo, 1.0),
        "fista_box_budget k=8": lambda: K.fista_box_budget(gram, lin, lo, 1.0, np.full(8, 0.125)),
    }


def timeit(fn, repeat):
    fn()  # warm-up (and JIT compile)
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speed-up':>9s}")
    for name, fn in cases(rng).items():
        with K.backend("numba"):
            a = timeit(fn, args.repeat)
        with K.backend("numpy"):
            b = timeit(fn, args.repeat)
        print(f"{name:28s} {a * 1e3:11.3f} {b * 1e3:11.3f} {b / a:9.1f}x")


if __name__ == "__main__":
    main()
