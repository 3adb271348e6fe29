"""Compare the compiled and the pure-Python kernel backends.

Usage: ``python benchmarks/bench_kernels.py [--repeat 7]``

Prints the median time per call for every kernel on both backends, whether
the outputs are identical, and the time of a few end-to-end solves.
"""
from __future__ import annotations

import argparse
import statistics
import timeit

import numpy as np

from madrp import kernels
from madrp.scenarios import synth_market
from madrp.solvers import solve


def _cases(T=1000, n=100, seed=0):
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((T, n)) * 0.01
    D -= D.mean(axis=0)
    x = rng.dirichlet(np.ones(n))
    d = D @ x
    s = np.sign(d)
    w = np.cumprod(1.0 + rng.standard_normal(T) * 0.01)
    return {
        "deviations": (kernels.deviations, (D, x)),
        "abs_sums": (kernels.abs_sums, (d,)),
        "sign_select": (kernels.sign_select, (d, 1e-12, "zero")),
        "signed_colmean": (kernels.signed_colmean, (D, s)),
        "drawdowns": (kernels.drawdowns, (w,)),
        "worst_pair_product": (kernels.worst_pair_product, (D[:200, :40],)),
        "sign_consistent": (kernels.sign_consistent, (d, s, 1e-12)),
    }


def _median_time(fn, args, repeat):
    t = timeit.Timer(lambda: fn(*args))
    number, _ = t.autorange()
    return statistics.median(t.repeat(repeat=repeat, number=number)) / number


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    cases = _cases()
    print(f"{'kernel':<20}" + "".join(f"{b + ' (us)':>16}" for b in backends) + f"{'identical':>12}")
    for name, (fn, fargs) in cases.items():
        times, outs = [], []
        for b in backends:
            kernels.use_backend(b)
            outs.append(fn(*fargs))
            times.append(_median_time(fn, fargs, args.repeat) * 1e6)
        same = all(_same(outs[0], o) for o in outs[1:])
        print(f"{name:<20}" + "".join(f"{t:>16.2f}" for t in times) + f"{str(same):>12}")

    print()
    print(f"{'end-to-end solve':<28}" + "".join(f"{b + ' (ms)':>16}" for b in backends))
    scn = synth_market(30, 250, seed=1)
    for method in ("log_constr", "ls_rel", "min_mad"):
        row = []
        for b in backends:
            kernels.use_backend(b)
            row.append(_median_time(lambda: solve(scn, method), (), 3) * 1e3)
        print(f"{method + ' n=30 T=250':<28}" + "".join(f"{t:>16.2f}" for t in row))
    kernels.use_backend(backends[-1])


if __name__ == "__main__":
    main()
