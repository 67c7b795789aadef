"""Time the numba kernels against their pure-numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py [--repeat R]``. Each kernel is
called once untimed (numba compiles on first use), then timed ``R`` times on
inputs sized like an n = 1000 benchmark replicate. The two outputs are
compared so a speedup never hides a wrong answer.
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from semispec import _kernels


def workloads(rng):
    n = 1000
    s = np.sort(rng.uniform(0, n, n))
    x = rng.standard_normal(n)
    delta = 1.0 / 2.0
    cells = np.floor(s / delta + 0.5).astype(np.int64)
    lo = np.geomspace(0.2, 1.0, 10) * 0.9
    hi = np.geomspace(0.2, 1.0, 10) * 1.05
    nodes = rng.uniform(0, math.pi, 2000)
    weights = rng.standard_normal(2000)
    h = np.linspace(0, 100, 4097)
    coef = rng.standard_normal(2000)
    return {
        "cell_lag_sums": (cells, x, int(cells.max()) + 1, int(cells.max())),
        "binned_pair_sums": (s, x, lo, hi),
        "cosine_transform": (nodes, weights, h),
        "sinc_pair_series": (coef, math.pi, h),
    }


def _max_diff(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.max(np.abs(np.asarray(u, float) - np.asarray(v, float))))
               for u, v in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max |diff|':>11}")
    for name, call_args in workloads(rng).items():
        fn_np = getattr(_kernels.numpy_impl, name)
        fn_nb = getattr(_kernels.numba_impl, name)
        diff = _max_diff(fn_np(*call_args), fn_nb(*call_args))  # also warms the JIT
        t_np = min(timeit.repeat(lambda: fn_np(*call_args), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn_nb(*call_args), number=1, repeat=args.repeat))
        print(f"{name:<18} {1e3 * t_np:>11.2f} {1e3 * t_nb:>11.2f} {t_np / t_nb:>7.1f}x {diff:>11.1e}")


if __name__ == "__main__":
    main()
