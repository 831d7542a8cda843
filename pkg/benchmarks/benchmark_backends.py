#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Both backends must produce identical reports; this script times full runs
on each and checks that equality while it is at it.

Usage:
    python benchmarks/benchmark_backends.py
    python benchmarks/benchmark_backends.py --nodes 250 --rounds 500 --repeats 3
    LOTUSSIM_BACKEND=numpy lotussim run ...   # same switch, whole CLI
"""

import argparse
import time

from lotussim import kernels
from lotussim.adversary import AttackConfig, ATTACK_BY_NAME
from lotussim.core import ProtocolParams
from lotussim.engine import SimConfig, run


def build_config(args):
    kind = ATTACK_BY_NAME[args.attack]
    return SimConfig(
        params=ProtocolParams(num_nodes=args.nodes, push_size=args.push_size),
        attack=AttackConfig(kind=kind, attacker_frac=args.attacker_frac if args.attack != "none" else 0.0),
        total_rounds=args.rounds,
        warmup_rounds=min(20, args.rounds - 10),
        master_seed=args.seed,
    )


def time_backend(config, backend, repeats):
    best = float("inf")
    report = None
    for _ in range(repeats):
        start = time.perf_counter()
        report = run(config, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, report


def main():
    parser = argparse.ArgumentParser(description="numba vs numpy backend benchmark")
    parser.add_argument("--nodes", type=int, default=250)
    parser.add_argument("--rounds", type=int, default=500)
    parser.add_argument("--push-size", type=int, default=2)
    parser.add_argument("--attack", default="trade", choices=sorted(ATTACK_BY_NAME))
    parser.add_argument("--attacker-frac", type=float, default=0.22)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    config = build_config(args)
    print(f"numba available: {kernels.NUMBA_AVAILABLE}")
    print(f"config: {args.nodes} nodes x {args.rounds} rounds, attack={args.attack} "
          f"frac={args.attacker_frac}, repeats={args.repeats} (best-of)")

    if kernels.NUMBA_AVAILABLE:
        t0 = time.perf_counter()
        run(config, backend="numba")  # compile + warm caches
        print(f"numba first call (includes JIT): {time.perf_counter() - t0:.2f}s")

    rows = []
    numba_report = None
    if kernels.NUMBA_AVAILABLE:
        t, numba_report = time_backend(config, "numba", args.repeats)
        rows.append(("numba", t))
    t, numpy_report = time_backend(config, "numpy", max(1, args.repeats // 3))
    rows.append(("numpy", t))

    print(f"\n{'backend':>8} {'seconds':>10} {'rounds/s':>10}")
    for name, t in rows:
        print(f"{name:>8} {t:>10.4f} {args.rounds / t:>10.1f}")
    if numba_report is not None:
        numpy_t = rows[-1][1]
        numba_t = rows[0][1]
        print(f"\nspeedup: {numpy_t / numba_t:.1f}x")
        print(f"reports identical: {numba_report == numpy_report}")
        if numba_report != numpy_report:
            raise SystemExit("backend mismatch: reports differ")


if __name__ == "__main__":
    main()
