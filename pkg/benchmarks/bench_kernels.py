#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Times the four backend entry points on representative inputs and prints the
median over several repeats plus the speedup.  Forcing the fallback with
VELOFUSE_PURE_PYTHON=1 is unnecessary here; both modules are imported
directly.
"""

import argparse
import statistics
import time

import numpy as np

from velofuse import _purepy
from velofuse.saito import FilterParams

try:
    from velofuse import _core
except ImportError:
    _core = None

N_FRAMES = 5_000
MAP_SHAPE = (32, 64)
P0 = (1.0e6, 1.0e8, 1.0e7)


def make_inputs(seed=3):
    rng = np.random.default_rng(seed)
    d = 40_000.0 + np.cumsum(rng.normal(0.0, 100.0, N_FRAMES))
    d[rng.random(N_FRAMES) < 0.1] = np.nan
    d1 = rng.uniform(1.0, 60.0, MAP_SHAPE)
    d2 = rng.uniform(1.0, 60.0, MAP_SHAPE)
    r1 = rng.uniform(0.0, 1.0, MAP_SHAPE)
    r2 = rng.uniform(0.0, 1.0, MAP_SHAPE)
    p1 = rng.random(MAP_SHAPE) < 0.7
    p2 = rng.random(MAP_SHAPE) < 0.7
    disp = rng.uniform(5.0, 60.0, MAP_SHAPE)
    present = rng.random(MAP_SHAPE) < 0.6
    params = FilterParams().as_tuple()
    return {
        "filter_trace": (d, 0.05, params),
        "kalman_trace": (d, 0.05, 150.0, 300.0, 0.05, 560_000.0, P0),
        "fuse_maps": (d1, r1, p1, d2, r2, p2),
        "depth_stats": (disp, present, 10, 4, 30, 20, 560_000.0, 500.0),
    }


def bench(fn, args, repeat, inner):
    # median over repeats; map kernels are fast enough to need an inner loop
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        times.append((time.perf_counter() - start) / inner)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=7, help="timing repeats (median)")
    args = ap.parse_args()

    if _core is None:
        print("compiled extension not available; nothing to compare")
        return

    inputs = make_inputs()
    inner = {"filter_trace": 1, "kalman_trace": 1, "fuse_maps": 50, "depth_stats": 50}
    print(f"{N_FRAMES} frames / {MAP_SHAPE[0]}x{MAP_SHAPE[1]} cells, "
          f"median of {args.repeat}")
    print(f"{'kernel':>14} {'compiled':>12} {'purepy':>12} {'speedup':>9}")
    for name, fn_args in inputs.items():
        tc = bench(getattr(_core, name), fn_args, args.repeat, inner[name])
        tp = bench(getattr(_purepy, name), fn_args, args.repeat, inner[name])
        print(f"{name:>14} {tc * 1e3:10.3f} ms {tp * 1e3:10.3f} ms {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
