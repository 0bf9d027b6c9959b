#!/usr/bin/env python3
"""Time the numba kernels against their numpy twins.

Both backends are imported from the same module, so one process compares
them directly regardless of ``MVM_DISABLE_NUMBA``. The first numba call is
excluded (it pays for compilation or cache loading).

    python3 benchmarks/bench_kernels.py --sizes 64,512,2048 --dim 4
"""
import argparse
import json
import time

import numpy as np

from mvm import kernels
from mvm._accel import NUMBA_AVAILABLE


def best_time(fn, args, repeats):
    fn(*args)  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(sizes, dim, repeats, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for k in sizes:
        a = rng.normal(size=(k, dim))
        b = rng.normal(size=(k, dim))
        cases = {
            "pairwise": (a,),
            "cross": (a, b),
            "directed_hausdorff": (a, b),
            "power_sum": (a, 2.0),
        }
        for name, args in cases.items():
            t_np = best_time(kernels.NUMPY_KERNELS[name], args, repeats)
            row = {"kernel": name, "k": k, "dim": dim, "numpy_s": t_np}
            if NUMBA_AVAILABLE:
                t_nb = best_time(kernels.NUMBA_KERNELS[name], args, repeats)
                row["numba_s"] = t_nb
                row["speedup"] = t_np / t_nb
            rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,256,1024,2048")
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print JSON instead of a table")
    args = ap.parse_args()
    rows = bench([int(s) for s in args.sizes.split(",")], args.dim, args.repeats)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'kernel':<20}{'k':>6}{'numpy ms':>12}{'numba ms':>12}{'speedup':>9}")
    for r in rows:
        nb = f"{1e3 * r['numba_s']:12.3f}" if "numba_s" in r else f"{'n/a':>12}"
        sp = f"{r['speedup']:9.2f}" if "speedup" in r else f"{'':>9}"
        print(f"{r['kernel']:<20}{r['k']:>6}{1e3 * r['numpy_s']:12.3f}{nb}{sp}")


if __name__ == "__main__":
    main()
