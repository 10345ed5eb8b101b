#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs every hot kernel on large envelope arrays with both backends and
prints the per-call timing and speedup. Compile time is excluded by a
warm-up call. Use THZPA_NO_NUMBA=1 at package runtime to force the
fallback path benchmarked here.
"""

import argparse
import time

import numpy as np

from thzpa import _kernels

CASES = [
    ("rapp_amp", (13.0732, 0.0559, 0.878)),
    ("rapp_phase", (-1.7204e5, 8.5695e-3, 1.6949, 1.7404)),
    ("rapp_inverse_amp", (13.0732, 0.0559, 0.878)),
    ("saleh_general", (10.127, 5995.0, 1.0, 1.0)),
    ("ghorbani", (101.934, 1.26, 1728.859, -0.0174)),
    ("horner", (np.array([2e-4, 1.3, -40.0, 1e4, -2e5, 1e6, 0.0, -1e7, 3e7]),)),
]


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=10_000_000)
    args = parser.parse_args()

    rho = np.geomspace(1e-7, 4e-3, args.samples)
    numpy_backend = _kernels.numpy_backend()
    try:
        numba_backend = _kernels.build_numba_backend()
    except ImportError:
        numba_backend = None
        print("numba unavailable; benchmarking the numpy path only\n")

    print(f"{args.samples:,} samples per call, best of 5\n")
    print(f"{'kernel':<18} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for name, extra in CASES:
        domain = np.linspace(-40.0, 0.0, args.samples) if name == "horner" else rho
        t_np = time_call(numpy_backend[name], domain, *extra)
        if numba_backend is None:
            print(f"{name:<18} {1e3 * t_np:>12.1f} {'-':>12} {'-':>9}")
            continue
        numba_backend[name](domain[:16].copy(), *extra)  # warm-up / compile
        t_nb = time_call(numba_backend[name], domain, *extra)
        print(f"{name:<18} {1e3 * t_np:>12.1f} {1e3 * t_nb:>12.1f} {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
