"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py --paths 2000 --steps 1024

Both backends run on identical inputs; the script also reports the largest
difference between their outputs.
"""

import argparse
import math
import time

import numpy as np

from fimkit import core, fim, kernels
from fimkit._accel import HAS_NUMBA
from fimkit.core import TimeGrid


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_em(paths, steps, h, repeat):
    rng = np.random.default_rng(0)
    noise = rng.standard_normal((paths, steps))
    start = np.zeros((paths, steps + 1))
    start[:, 0] = fim.sample_fim_marginal(h, 1.0, core.RngStream(0), size=paths)
    floor = fim.EmScheme(1.0 / steps).floor_for(h)
    res = {}
    for b in backends():
        def run():
            pos = start.copy()
            kernels.em_volatility(pos, noise, 0, 1.0 / steps, h, floor, b)
            return pos
        res[b] = best_of(run, repeat)
    return res


def bench_langevin(paths, steps, h, repeat):
    rng = np.random.default_rng(1)
    noise = rng.standard_normal((paths, steps))
    start = np.zeros((paths, steps + 1))
    start[:, 0] = 1.0
    res = {}
    for b in backends():
        def run():
            pos = start.copy()
            kernels.em_log_potential(pos, noise, 0, 1.0 / steps, h, 1e-4, b)
            return pos
        res[b] = best_of(run, repeat)
    return res


def bench_exact(paths, steps, h, repeat):
    g = TimeGrid.uniform(1.0, steps)
    p = fim.FimParams(h)
    return {b: best_of(lambda: fim.simulate_fim_exact_ensemble(p, g, paths, 0, backend=b).paths, repeat)
            for b in backends()}


def bench_incgamma(n, repeat):
    x = np.random.default_rng(2).exponential(3.0, n)
    a = 0.75
    lga = math.lgamma(a)
    res = {}
    if HAS_NUMBA:
        res["numba"] = best_of(lambda: core._gammainc_array(a, x, lga), repeat)
    res["numpy"] = best_of(lambda: core._incgamma_np(a, x, lga, log_upper=False), repeat)
    return res


def backends():
    return ["numba", "numpy"] if HAS_NUMBA else ["numpy"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=1024)
    ap.add_argument("--exact-steps", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba unavailable or disabled (FIMKIT_NUMBA=0); timing numpy only")

    # compile once outside the timings
    bench_em(4, 8, 0.75, 1)
    bench_langevin(4, 8, 0.75, 1)
    bench_exact(4, 8, 0.75, 1)
    bench_incgamma(10, 1)

    rows = [
        ("em_volatility H=0.75", bench_em(args.paths, args.steps, 0.75, args.repeat)),
        ("em_volatility H=0.25", bench_em(args.paths, args.steps, 0.25, args.repeat)),
        ("em_log_potential H=0.75", bench_langevin(args.paths, args.steps, 0.75, args.repeat)),
        ("exact sampler H=0.75", bench_exact(args.paths, args.exact_steps, 0.75, args.repeat)),
        ("incomplete gamma 1e6", bench_incgamma(10**6, args.repeat)),
    ]
    print(f"{'kernel':26s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, res in rows:
        tn = res["numpy"][0]
        if "numba" in res:
            tb = res["numba"][0]
            diff = float(np.max(np.abs(res["numba"][1] - res["numpy"][1])))
            print(f"{name:26s} {tb:10.4f} {tn:10.4f} {tn / tb:8.1f} {diff:11.2e}")
        else:
            print(f"{name:26s} {'-':>10s} {tn:10.4f} {'-':>8s} {'-':>11s}")


if __name__ == "__main__":
    main()
