"""Compiled vs pure-Python percolation kernels.

    python benchmarks/bench_kernels.py [--sizes 32,64,128] [--repeat 5]

Times one Newman-Ziff bond sweep, one site sweep and one cluster labelling
on the square torus with each backend, checks that both return the same
arrays, and prints the speed-up.
"""

import argparse
import timeit

import numpy as np

from qnet import netgraph
from qnet.perc import _pykernels, engine

try:
    from qnet.perc import _kernels
except ImportError:
    _kernels = None


def workloads(L, seed=0):
    net = netgraph.gen_square(L, "torus")
    r = np.random.default_rng(seed)
    eu, ev, wx, wy = engine._edge_arrays(net)
    indptr, nbr, _, wind = net.csr
    site = (net.n, indptr, np.ascontiguousarray(nbr, np.int32), np.ascontiguousarray(wind[:, 0]),
            np.ascontiguousarray(wind[:, 1]))
    bond_order = r.permutation(net.m).astype(np.int64)
    site_order = r.permutation(net.n).astype(np.int64)
    mask = np.ascontiguousarray(r.random(net.m) < 0.5, dtype=np.uint8)
    return {
        "bond sweep": lambda k: k.nz_bond_sweep(net.n, eu, ev, wx, wy, bond_order, 0),
        "site sweep": lambda k: k.nz_site_sweep(*site, site_order, 0),
        "label bonds": lambda k: k.label_bonds(net.n, eu, ev, wx, wy, mask),
    }


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="32,64,128")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        raise SystemExit("compiled kernels not built; run `pip install --no-build-isolation -e .` first")
    print(f"{'L':>5} {'kernel':<12} {'cython ms':>10} {'python ms':>10} {'speed-up':>9}")
    for L in (int(s) for s in args.sizes.split(",")):
        for name, run in workloads(L).items():
            for a, b in zip(run(_kernels), run(_pykernels)):
                assert np.array_equal(a, b), f"{name} differs between backends at L={L}"
            tc = best_time(lambda: run(_kernels), args.repeat)
            tp = best_time(lambda: run(_pykernels), args.repeat)
            print(f"{L:>5} {name:<12} {1e3 * tc:>10.3f} {1e3 * tp:>10.2f} {tp / tc:>8.0f}x")


if __name__ == "__main__":
    main()
