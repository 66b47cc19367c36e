"""Compiled kernels versus the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the multi-start fixed-point search and the simplex grid used by the
gamma-bound check, and reports the largest disagreement between backends.
"""

import argparse
import time

import numpy as np

from psos_gibbs import backend
from psos_gibbs.extremality import _log_args
from psos_gibbs.laws import find_branch
from psos_gibbs.params import ModelParams
from psos_gibbs.recursion import coupling_logs, start_points


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_multistart(impls, repeat):
    params = ModelParams(0.15, 0.1)
    W = coupling_logs(params)
    H0 = start_points(params.m, 64, seed=0)
    res = {}
    for name, mod in impls.items():
        res[name] = _best(lambda: mod.multistart(H0, W, 2.0, 0.5, 2000, 200, 1e-6), repeat)
    return res


def bench_gamma(impls, repeat, n=200):
    params = ModelParams(0.3, 2.0)
    args = _log_args(find_branch(params, 1), params)
    res = {}
    for name, mod in impls.items():
        res[name] = _best(lambda: mod.gamma_grid_max(*args, n), repeat)
    return res


def _flatten(out):
    parts = out if isinstance(out, tuple) else (out,)
    return np.concatenate([np.ravel(np.asarray(v, dtype=float)) for v in parts])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = backend.implementations()
    print(f"default backend: {backend.BACKEND}; available: {', '.join(impls)}")
    for label, res in (
        ("multistart (64 starts, m=2)", bench_multistart(impls, args.repeat)),
        ("gamma grid (n=200)", bench_gamma(impls, args.repeat)),
    ):
        base = res["python"][0]
        print(f"\n{label}")
        for name, (t, _) in res.items():
            print(f"  {name:8s} {t * 1e3:10.2f} ms   x{base / t:6.1f}")
        if "cython" in res:
            a, b = _flatten(res["python"][1]), _flatten(res["cython"][1])
            ok = np.isfinite(a) & np.isfinite(b)
            print(f"  max |python - cython| = {np.max(np.abs(a[ok] - b[ok])):.3g}")


if __name__ == "__main__":
    main()
