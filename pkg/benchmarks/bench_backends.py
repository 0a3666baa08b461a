#!/usr/bin/env python3
"""Time the numba kernels against the numpy fallback.

Usage:
    python benchmarks/bench_backends.py [--sizes 1000 2000 5000] [--repeat 3]

The first numba call per kernel includes JIT compilation (or a cache load)
and is excluded; results are checked for agreement before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from intflow import use_backend
from intflow.distributions import GaussianMixture, Perturbation, SampleSet
from intflow.experiment import DEFAULT_MIXTURE
from intflow.flow import estimate_flow
from intflow.griddiag import GridSpec, kde
from intflow.ksd import ksd_ustat, median_bandwidth


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 5000])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    mix = GaussianMixture(**DEFAULT_MIXTURE)
    pert = Perturbation.random(mix, seed=0)
    cases = {
        "estimate_flow": lambda s, g: estimate_flow(s).vectors,
        "ksd_ustat": lambda s, g: ksd_ustat(s.points, mix.grad_log_density, 1.0).ustat,
        "median_bandwidth": lambda s, g: median_bandwidth(s.points),
        "kde 200x200": lambda s, g: kde(s.points, 0.2, g).values,
    }

    with use_backend("numba"):
        warm = SampleSet.draw(mix, pert, 50, seed=1)
        for fn in cases.values():
            fn(warm, GridSpec.square(4, 16))

    print(f"{'kernel':<18}{'N':>7}{'numba s':>11}{'numpy s':>11}{'speedup':>9}")
    for N in args.sizes:
        s = SampleSet.draw(mix, pert, N, seed=2)
        grid = GridSpec.covering(s.points, 0.6, 200)
        for name, fn in cases.items():
            with use_backend("numba"):
                t_nb, a = best_of(lambda: fn(s, grid), args.repeat)
            with use_backend("numpy"):
                t_np, b = best_of(lambda: fn(s, grid), args.repeat)
            if not np.allclose(a, b, rtol=1e-9, atol=1e-12):
                raise SystemExit(f"{name}: backends disagree at N={N}")
            print(f"{name:<18}{N:>7}{t_nb:>11.4f}{t_np:>11.4f}{t_np / t_nb:>9.1f}")


if __name__ == "__main__":
    main()
