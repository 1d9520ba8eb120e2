"""Time the compiled and pure-Python integration kernels on the same runs.

Usage: python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""
import argparse
import time

import numpy as np

from geoflow import _backend
from geoflow.dynamics import MAX_ITER, NEWTON_TOL, _dop853_tableau

MODELS = {"e3": 0, "nil": 1, "sol": 2}
U0 = np.array([0.1, -0.2, 0.3, 0.4, -0.8, 0.6])


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def runs(kern, code, steps):
    A, B = _dop853_tableau()
    return {
        "midpoint": lambda: kern.midpoint_run(code, U0, 1e-2, steps, steps, NEWTON_TOL, MAX_ITER),
        "leapfrog": lambda: kern.leapfrog_run(code, U0, 1e-2, steps, steps, NEWTON_TOL, MAX_ITER),
        "rk8": lambda: kern.rk_run(code, U0, 1e-2, steps, steps, A, B),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    py, cy = _backend.python_kernels, _backend.compiled_kernels
    if cy is None:
        print("compiled extension not built; timing the Python kernels only")
    print(f"{'model':<6}{'scheme':<10}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for name, code in MODELS.items():
        rp = runs(py, code, args.steps)
        rc = runs(cy, code, args.steps) if cy is not None else {}
        for scheme, fn in rp.items():
            tp = best_of(fn, args.repeat)
            if scheme in rc:
                tc = best_of(rc[scheme], args.repeat)
                print(f"{name:<6}{scheme:<10}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")
            else:
                print(f"{name:<6}{scheme:<10}{tp:>12.4f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
