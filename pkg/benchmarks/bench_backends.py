"""Compare the compiled and pure-Python transport kernels on the same workload.

    python3 benchmarks/bench_backends.py [--photons N] [--b0 B] [--repeat R]

Both backends trace identical histories, so the script also checks that the
tallies agree bit for bit before reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from randlase.medium import ChannelGeometry, CloudGeometry, Medium
from randlase.spectral import SpectralModel
from randlase.transport import RunConfig, available_backends, run


def workload(b0: float, photons: int):
    radius = b0 / 2.0
    medium = Medium(CloudGeometry(radius=radius), ChannelGeometry(0.1 * radius))
    spectral = SpectralModel(rabi_2v=30.0, gain_kappa=1e-4, beta0=0.01)
    return medium, spectral, RunConfig(n_photons=photons, seed=2024)


def time_backend(backend, medium, spectral, cfg, repeat):
    best = float("inf")
    tally = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        tally = run(medium, spectral, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, tally


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--photons", type=int, default=2000)
    ap.add_argument("--b0", type=float, default=10.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    medium, spectral, cfg = workload(args.b0, args.photons)
    results = {}
    for backend in available_backends():
        results[backend] = time_backend(backend, medium, spectral, cfg, args.repeat)

    ref = results["python"][1]
    print(f"workload: b0={args.b0:g} photons={args.photons} repeat={args.repeat}")
    for backend, (sec, tally) in results.items():
        same = (np.array_equal(tally.escaped, ref.escaped)
                and np.array_equal(tally.angular_hist, ref.angular_hist))
        rate = args.photons / sec
        print(f"  {backend:>7}: {sec:8.3f} s  {rate:12.0f} photons/s  identical={same}")
    if "cython" in results:
        print(f"  speed-up: {results['python'][0] / results['cython'][0]:.1f}x")
    return results


if __name__ == "__main__":
    main()
