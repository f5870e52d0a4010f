"""Time the numba and numpy variants of every hot kernel.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Both variants are checked for agreement before timing.  Numba variants are
called once first so compilation is excluded.
"""

import argparse
import json
import timeit

import numpy as np

from recentering import kernels


def cases(rng):
    J, S = 64, 64
    p, q = rng.standard_normal(200), rng.standard_normal(200)
    pi, phi = rng.standard_normal((J, S)), rng.standard_normal((J, S))
    c, d = np.full(S, 0.5), np.full(S, 2.0)
    x = rng.standard_normal(256)
    nodes = np.linspace(-40, 40, 4000)
    nodes = nodes[nodes != 0]
    w = np.exp(-nodes ** 2) * (nodes[1] - nodes[0])
    ci = np.array([0, 2], dtype=np.int64)
    cj = np.array([2, 0], dtype=np.int64)
    cc = np.array([0.5, 0.5])
    e = np.zeros(0)
    A = rng.standard_normal((24, 24)) + 0j
    x3 = rng.standard_normal((24, 24, 24)) + 0j
    return {
        "overlap_gram_1dof": (p, q, 1.3),
        "gaussian_weyl_gram": (pi, phi, c, d, 0.7),
        "levy_sum": (x, nodes, w),
        "rk4_hamilton": (ci, cj, cc, 1.0, 0.0, 0.0, 1e-3, 10000),
        "rk4_reparam": (ci, cj, cc, 1.0, np.array([0.5]), e, 1.0, 1.0, 0.0, 0.0, -0.5, 0.0, 1e-4, 20000),
        "apply_site": (A, x3),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write timings to this file")
    args = ap.parse_args(argv)

    impls = kernels.IMPLEMENTATIONS
    if "numba" not in impls:
        print("numba not installed; only the numpy variants are available")
    rng = np.random.default_rng(0)
    results = {}
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max diff':>12}")
    for name, a in cases(rng).items():
        row = {}
        outs = {}
        for backend, table in impls.items():
            fn = table[name]
            outs[backend] = np.asarray(fn(*a))
            t = min(timeit.repeat(lambda: fn(*a), number=1, repeat=args.repeat))
            row[backend] = 1e3 * t
        diff = float(np.abs(outs["numpy"] - outs["numba"]).max()) if "numba" in outs else float("nan")
        row["max_diff"] = diff
        results[name] = row
        nb = row.get("numba", float("nan"))
        print(f"{name:<20}{row['numpy']:>12.3f}{nb:>12.3f}{row['numpy'] / nb:>10.1f}{diff:>12.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
