"""Compiled vs pure-Python kernels: throughput and bit-identity.

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from lifshitz import kernels


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n):
    rng = np.random.default_rng(0)
    ys = rng.uniform(0.0, 0.15, n)
    us = rng.uniform(0.0, 1.0, n)
    v = rng.uniform(0.0, 1.0, n)
    return {
        "model_orbit": (lambda k: k.model_orbit(0.0, 0.01, 0.2, ys), n),
        "anderson_orbit": (lambda k: k.anderson_orbit(0.0, 0.5, us), n),
        "envelope_passage": (lambda k: k.envelope_passage(2, 1.0, 1e-9, -0.1, 0.1, 1e-9**0.5, 10**9), None),
        "sturm_count": (lambda k: k.sturm_count(v, 0.5), n),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'kernel':18s} {'steps':>9s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}  identical")
    for name, (call, steps) in cases(args.n).items():
        tc, oc = _time(lambda: call(kernels.compiled), args.repeat)
        tp, op = _time(lambda: call(kernels.pure), 1)
        if steps is None:
            steps = oc[0]
        print(f"{name:18s} {steps:9d} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}  {oc == op}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
