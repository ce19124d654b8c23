#!/usr/bin/env python3
"""Compare the numba and numpy backends on the two hot kernels.

* round resolution: ``protocol.simulate_block`` on pre-drawn uniforms
* trapezoidal moments: ``wavepacket.moments`` on a propagated field

Usage::

    python benchmarks/bench_kernels.py [--rounds N] [--repeat R]
"""

import argparse
import time

import numpy as np

from fcqkd import _backend, protocol
from fcqkd.config import paper_config
from fcqkd.wavepacket import PulseParams, moments, numeric_propagate


def best_of(f, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_rounds(n, repeat, backends):
    cfg = paper_config().with_eve(True, intercept_probability=0.5)
    u = np.random.default_rng(0).random((n, protocol.DRAWS_PER_ROUND))
    tables = protocol.round_tables(cfg)
    period = protocol.emission_period(cfg)
    out = {}
    for b in backends:
        run = lambda: protocol.simulate_block(cfg, u, tables=tables, period=period, backend=b)  # noqa: E731
        run()  # compile / warm caches
        out[b] = best_of(run, repeat)
    return out


def bench_moments(repeat, backends):
    p = PulseParams(1e15, 1e12)
    f = numeric_propagate(p, 1e-27, 5e-9, 1e6)
    out = {}
    for b in backends:
        run = lambda: moments(f, backend=b)  # noqa: E731
        run()
        out[b] = best_of(run, repeat)
    return out, len(f)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if _backend.HAVE_NUMBA else [])
    if len(backends) == 1:
        print("numba not importable; timing the numpy path only")

    rounds = bench_rounds(args.rounds, args.repeat, backends)
    mom, n = bench_moments(args.repeat, backends)

    print(f"{'kernel':<28}{'backend':<8}{'best (ms)':>12}{'speed-up':>10}")
    for name, res in ((f"rounds (n={args.rounds})", rounds), (f"moments (n={n})", mom)):
        ref = res["numpy"]
        for b, t in res.items():
            print(f"{name:<28}{b:<8}{t * 1e3:>12.2f}{ref / t:>10.2f}")
    if "numba" in rounds:
        print(f"round throughput (numba): {args.rounds / rounds['numba'] / 1e6:.1f} M rounds/s")


if __name__ == "__main__":
    main()
