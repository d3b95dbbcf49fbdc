#!/usr/bin/env python3
"""Compare the compiled integration kernels against the pure-Python fallback.

Workloads mirror the solver's hot path: controlled integration with the full
variational (sensitivity) system, plain controlled integration, and the
unit-input flow used by the coupling scans.

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from sepoc import kernels
from sepoc.models import (adn_initial_state, adn_system, default_graph,
                          kuramoto_system, oa_initial_state, oa_system,
                          power_law_distribution, splay_state)
from sepoc.validate import random_positive_control

CASES = [
    ("kuramoto-n10", kuramoto_system(default_graph()), splay_state(10)),
    ("oa-M10", oa_system(power_law_distribution(np.arange(1.0, 11.0), 2.2)),
     oa_initial_state(10, 0.1)),
    ("adn-M5", adn_system(power_law_distribution(0.2 + 0.4 * np.arange(5.0), 2.2)),
     adn_initial_state(5, 0.02)),
]

WORKLOADS = [
    ("controlled+sens q=10", dict(with_sens=True, q=10, rescaled=False)),
    ("controlled        ", dict(with_sens=False, q=10, rescaled=False)),
    ("rescaled flow     ", dict(with_sens=False, q=0, rescaled=True)),
]


def run_case(sys_, z0, spec, backend, repeats):
    c = random_positive_control(np.random.default_rng(0), 10, 3.0)
    cheb = None if spec["rescaled"] else c.chebyshev_coeffs()
    te = np.linspace(0.0, 3.0, 9)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.solve_model(sys_.kernel, z0, cheb, 3.0, 1e-10, te,
                            spec["with_sens"], backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    if not kernels.HAVE_COMPILED:
        print("compiled extension not built; nothing to compare")
        return

    print(f"{'model':<14} {'workload':<22} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, sys_, z0 in CASES:
        for wname, spec in WORKLOADS:
            t_py = run_case(sys_, z0, spec, "python", args.repeats)
            t_c = run_case(sys_, z0, spec, "compiled", args.repeats)
            print(f"{name:<14} {wname:<22} {t_py * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms "
                  f"{t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
