"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Prints one line per kernel with the best wall time of each backend and
checks that both return the same value.
"""

import argparse
import time

import numpy as np

from metricmaps import kernels
from metricmaps.gromov_hausdorff import _eccentricity_order, gh_upper_bound
from metricmaps.metric_core import FiniteMetricSpace


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(rng):
    pts = rng.random((600, 2))
    d1 = FiniteMetricSpace.from_points(pts).dist
    d2 = FiniteMetricSpace.from_points(pts + 0.01 * rng.standard_normal(pts.shape)).dist
    k = 1500
    src = np.ascontiguousarray(rng.integers(0, 600, k), dtype=np.intp)
    dst = np.ascontiguousarray(rng.integers(0, 600, k), dtype=np.intp)
    src2 = np.ascontiguousarray(rng.integers(0, 600, k), dtype=np.intp)
    dst2 = np.ascontiguousarray(rng.integers(0, 600, k), dtype=np.intp)
    yield "relation_accuracy", lambda m: m.relation_accuracy(d1, d2, src, dst, 0, k)
    yield "directed_hausdorff", lambda m: m.directed_hausdorff(d1, d2, src, dst, src2, dst2, 2.0, 0, k)

    X = FiniteMetricSpace.from_points(rng.random((8, 2)))
    Y = FiniteMetricSpace.from_points(rng.random((7, 2)))
    inc = gh_upper_bound(X, Y).value
    order = _eccentricity_order(X)
    yield "bnb_search", lambda m: m.bnb_search(X.dist, Y.dist, order, inc, 10_000_000)[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    names = sorted(kernels.BACKENDS)
    print(f"backends: {', '.join(names)}")
    for label, fn in cases(rng):
        times, vals = {}, {}
        for name in names:
            times[name], vals[name] = best_time(lambda: fn(kernels.BACKENDS[name]), args.repeat)
        agree = len(set(vals.values())) == 1
        cols = "  ".join(f"{n}={times[n] * 1e3:9.2f} ms" for n in names)
        speed = ""
        if "cython" in times:
            speed = f"  speedup x{times['python'] / times['cython']:.1f}"
        print(f"{label:20s} {cols}{speed}  agree={agree}")


if __name__ == "__main__":
    main()
