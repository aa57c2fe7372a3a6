"""Compare the compiled closed-loop kernel against the pure-Python fallback.

Usage: python bench/benchmark.py [--t-f SECONDS] [--repeat N]

Both backends run the same scenario from the same initial state; the script
reports wall time per rollout, the speedup, and the worst element-wise
disagreement between the two trajectory logs.
"""

import argparse
import time

import numpy as np

from quadverify.backend import available_backends
from quadverify.scenario import Scenario, simulate


def time_backend(sc, backend, repeat):
    best = float("inf")
    log = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        log = simulate(sc, backend=backend).log
        best = min(best, time.perf_counter() - t0)
    return best, log


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-f", type=float, default=5.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    sc = Scenario.from_dict({
        "reference": {"family": "circle"},
        "delay": {"tau": 0.03},
        "l1": {"enabled": True},
        "verify": {"t_f": args.t_f},
    })
    backends = available_backends()
    print(f"scenario: circle, tau=30ms, L1 on, t_f={args.t_f}s "
          f"({sc.n_steps} steps)")
    results = {}
    for b in backends:
        dt, log = time_backend(sc, b, args.repeat)
        results[b] = (dt, log)
        print(f"  {b:>7}: {dt * 1e3:9.2f} ms per rollout "
              f"({sc.n_steps / dt:,.0f} steps/s)")
    if "cython" in results and "python" in results:
        speedup = results["python"][0] / results["cython"][0]
        maxdiff = float(np.max(np.abs(results["python"][1]
                                      - results["cython"][1])))
        print(f"  speedup: {speedup:.0f}x, max trajectory disagreement: "
              f"{maxdiff:.2e}")


if __name__ == "__main__":
    main()
