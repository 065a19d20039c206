#!/usr/bin/env python3
"""Benchmark the Monte Carlo kernels: numba-compiled scalar loop vs the
pure-numpy lockstep fallback (the path selected by SAMC_PURE_NUMPY=1).

Both backends consume the same counter-based random stream, so after timing
the script verifies they produce identical estimates.

Run: python benchmarks/bench_mc.py [samples]
"""

import os
import sys
import time

from samc import estimate_until, fixtures, load_model
from samc._mc import kernel_backend
from samc.adversary import load_policy
from samc.logic import parse_formula


def timed(label: str, samples: int, repeats: int = 3):
    sa = load_model(fixtures.path("packet_shifted.sa"))
    adv = load_policy(fixtures.read("benevolent.pol"))
    formula = parse_formula("[ (a0 | a1) U{<=3/2} a2 ] > 1/2")

    # warm-up pays any jit compilation cost outside the timed loop
    estimate_until(sa, adv, formula, min(samples, 1000), seed=0)
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = estimate_until(sa, adv, formula, samples, seed=12345)
        best = min(best, time.perf_counter() - start)
    rate = samples / best
    print(f"{label:>8}: {best * 1e3:8.1f} ms for {samples} paths  ({rate / 1e6:.2f} M paths/s)")
    return result


def main() -> int:
    samples = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000

    os.environ.pop("SAMC_PURE_NUMPY", None)
    backend = kernel_backend()
    if backend != "numba":
        print("numba unavailable; timing the numpy fallback only")
        timed("numpy", samples)
        return 0

    jit_result = timed("numba", samples)
    os.environ["SAMC_PURE_NUMPY"] = "1"
    np_result = timed("numpy", samples)
    os.environ.pop("SAMC_PURE_NUMPY", None)

    identical = jit_result == np_result
    print(f"backends identical: {identical}")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
