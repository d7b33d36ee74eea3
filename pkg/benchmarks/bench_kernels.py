"""Compiled vs pure-Python kernels, plus one end-to-end sweep per backend.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ssvbounds import _kernels_py

try:
    from ssvbounds import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    N = rng.random((12, 12)) ** 4
    np.fill_diagonal(N, rng.random(12))
    p = np.array([40.0, 1.3, -0.7, 5.0, 0.4, 0.2, -0.3, 0.6, 2.0])
    n = 40
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    kinds = np.array([0, 1] * 5, dtype=np.int_)
    starts = np.arange(0, n, 4, dtype=np.int_)
    stops = starts + 4
    return {
        "osborne_sweeps (12x12)": lambda k: k.osborne_sweeps(N, 200, 1e-12),
        "quartic_newton": lambda k: k.quartic_newton(p, 50, 1e-10),
        "quartic_eval": lambda k: k.quartic_eval(p, 0.3, -0.2),
        "align (10 blocks)": lambda k: k.align(x, y, kinds, starts, stops),
    }


def sweep_time(pure):
    env = dict(os.environ, SSVBOUNDS_PURE_PYTHON="1" if pure else "0")
    code = (
        "import time, ssvbounds as s\n"
        "from ssvbounds.formats import read_state_space\n"
        "ss = read_state_space(s.data_path('academic_example.json'))\n"
        "st = s.BlockStructure.of(s.FullBlock(2), s.FullBlock(2))\n"
        "g = s.make_grid(1e-4, 10**1.5, 50, 'both')\n"
        "t = time.perf_counter(); s.sweep_bounds(ss, g, st)\n"
        "print(s.BACKEND, time.perf_counter() - t)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the pure-Python kernels are available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':26s} {'python us':>12s} {'cython us':>12s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        n = 200
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=n, repeat=args.repeat)) / n
        if _kernels is None:
            print(f"{name:26s} {tp * 1e6:12.2f}")
            continue
        tc = min(timeit.repeat(lambda: fn(_kernels), number=n, repeat=args.repeat)) / n
        print(f"{name:26s} {tp * 1e6:12.2f} {tc * 1e6:12.2f} {tp / tc:8.1f}x")
    for pure in (True, False):
        backend, t = sweep_time(pure)
        print(f"academic sweep, 100 points, non-repeated: {backend:7s} {t:.2f} s")


if __name__ == "__main__":
    main()
