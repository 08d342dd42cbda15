"""Time the compiled and numpy kernel backends on identical inputs.

Usage: python3 benchmarks/bench_kernels.py [--K 9] [--N 2000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from gfnets._kernels import available_backends


def cases(K, N, rng):
    a = rng.standard_normal((K, N)) * 0.3
    b = rng.standard_normal((K, N))
    b[0] = 2.0 + np.abs(b[0])
    T = rng.uniform(-1, 1, (800, 64))
    idx = np.arange(800, dtype=np.int64)
    return {
        "series_mul": (a, b),
        "series_div": (a, b),
        "series_exp": (a,),
        "series_sincos": (a,),
        "series_compose": (a, b),
        "cluster_counts": (T, idx[::4].copy(), idx, 0.8),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=9)
    ap.add_argument("--N", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    work = cases(args.K, args.N, np.random.default_rng(0))
    names = list(backends)
    print(f"{'kernel':<16}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for kernel, inputs in work.items():
        times = []
        for n in names:
            fn = getattr(backends[n], kernel)
            t = min(timeit.repeat(lambda: fn(*inputs), number=3, repeat=args.repeat)) / 3
            times.append(t)
        line = f"{kernel:<16}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[0] / times[1]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
