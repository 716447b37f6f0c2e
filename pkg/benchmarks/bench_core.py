"""Time the pairwise kernel sum and the full estimate on both backends.

    python benchmarks/bench_core.py [--repeat 5] [--json out.json]

The compiled path is skipped with a note when the extension is not built.
"""
import argparse
import json
import platform
import time

import numpy as np

from cgkdm import _pykernels
from cgkdm.copula import PseudoSample
from cgkdm.estimator import lag_table

try:
    from cgkdm import _ckernels
except ImportError:
    _ckernels = None

SHAPES = [(100, 2), (500, 2), (2000, 2), (100, 5), (500, 5), (200, 10)]


def _ranks(n, d, seed):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.permutation(n) + 1 for _ in range(d)]).astype(np.int32)


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(repeat=5, sigma=1.0):
    rows = []
    for n, d in SHAPES:
        r = _ranks(n, d, n * 31 + d)
        PseudoSample(r)  # validates the fixture
        tab = lag_table(n, sigma)
        row = {"n": n, "d": d, "python_s": _best(lambda: _pykernels.pair_excess_sum(r, tab), repeat)}
        if _ckernels is not None:
            row["cython_s"] = _best(lambda: _ckernels.pair_excess_sum(r, tab), repeat)
            row["speedup"] = row["python_s"] / row["cython_s"]
            a = _ckernels.pair_excess_sum(r, tab)
            b = _pykernels.pair_excess_sum(r, tab)
            row["rel_diff"] = abs(a - b) / abs(b)
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--json", default=None, help="also write the results here")
    args = ap.parse_args()
    rows = run(args.repeat, args.sigma)
    print(f"python {platform.python_version()}, numpy {np.__version__}, compiled={'yes' if _ckernels else 'no'}")
    print(f"{'n':>6} {'d':>3} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8} {'rel diff':>9}")
    for r in rows:
        if "cython_s" in r:
            print(f"{r['n']:>6} {r['d']:>3} {r['python_s'] * 1e3:>10.3f} {r['cython_s'] * 1e3:>10.3f} {r['speedup']:>8.1f} {r['rel_diff']:>9.1e}")
        else:
            print(f"{r['n']:>6} {r['d']:>3} {r['python_s'] * 1e3:>10.3f} {'-':>10} {'-':>8} {'-':>9}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
