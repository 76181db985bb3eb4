#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks and print JSON."""

import argparse
import json
import math
import platform
import statistics
import time

import numpy as np

from eqindex import _kernels
from eqindex.fixed_point import pair_partners, symmetric_midpoint_mesh
from eqindex.graded_forms import _wedge_table
from eqindex.spinors import chirality, clifford_generators, spin_lift

SEED = 42


def timeit(fn, warmup, runs):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(runs):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return {"median_s": statistics.median(times), "min_s": min(times)}


def wedge_case(n, d, rng):
    shape = (1 << n, d, d)
    a = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    b = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    tab = _wedge_table(n)

    def call(kernel):
        return lambda: kernel(a, b, *tab, np.zeros(shape, dtype=np.complex128))

    return f"wedge n={n} d={d}", call(_kernels.wedge_numba), call(_kernels.wedge_numpy)


def pair_sum_case(size, rng):
    x, _ = symmetric_midpoint_mesh(-1.0, 1.0, size)
    partner = pair_partners(x, [0.0])
    v = rng.normal(size=size) + 1j * rng.normal(size=size)
    return (f"pair_sum mesh={size}", lambda: _kernels.pair_sum_numba(v, partner),
            lambda: _kernels.pair_sum_numpy(v, partner))


def torus_case(K):
    c1, c2 = clifford_generators(2)
    args = (K, 0.05, c1, c2, 1, spin_lift([math.pi]), chirality(2))
    return f"torus_sum K={K}", lambda: _kernels.torus_sum_numba(*args), lambda: _kernels.torus_sum_numpy(*args)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--quick", action="store_true", help="small sizes only")
    p.add_argument("--out", help="also write the JSON here")
    args = p.parse_args(argv)

    rng = np.random.default_rng(SEED)
    if args.quick:
        cases = [wedge_case(4, 2, rng), pair_sum_case(1024, rng), torus_case(8)]
    else:
        cases = [wedge_case(4, 2, rng), wedge_case(6, 4, rng), wedge_case(8, 2, rng),
                 pair_sum_case(8192, rng), pair_sum_case(1 << 18, rng), torus_case(12), torus_case(40)]

    results = []
    for name, fast, slow in cases:
        a, b = fast(), slow()
        agree = bool(np.allclose(a, b, rtol=1e-12, atol=1e-12))
        t_numba = timeit(fast, args.warmup, args.runs)
        t_numpy = timeit(slow, args.warmup, args.runs)
        results.append({"case": name, "numba": t_numba, "numpy": t_numpy, "agree": agree,
                        "speedup": t_numpy["median_s"] / t_numba["median_s"]})

    doc = {"numba_available": _kernels.HAVE_NUMBA, "python": platform.python_version(),
           "numpy": np.__version__, "runs": args.runs, "results": results}
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


if __name__ == "__main__":
    main()
