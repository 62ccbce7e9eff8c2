"""Time the compiled queue-assignment kernel against the pure-Python path.

Both engines run the same seeded workloads, so the table also doubles as a
quick equality smoke test: the final column checks that the two engines
produced identical bottom lines draw for draw.

Usage: python3 benchmarks/bench_kernels.py [--seed S] [--scale X]
"""

import argparse
import time

import numpy as np

from mtasep.sampler import HAVE_KERNEL, sample_multitype

WORKLOADS = (
    ("distinct-100", (1,) * 100, 100, 0.5, 60),
    ("distinct-250", (1,) * 250, 250, 0.5, 12),
    ("two-type-1000", (300, 300), 1000, 0.3, 40),
    ("five-type-400", (80,) * 5, 500, 0.8, 12),
)


def run(name, counts, L, q, n, engine, seed):
    rng = np.random.default_rng(seed)
    bottoms = []
    start = time.perf_counter()
    for _ in range(n):
        bottoms.append(sample_multitype(counts, q, rng, L=L,
                                        engine=engine).bottom.types)
    return time.perf_counter() - start, bottoms


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--scale", type=float, default=1.0,
                        help="multiply every sample count by this factor")
    args = parser.parse_args()
    if not HAVE_KERNEL:
        print("compiled kernel not importable; nothing to compare")
        return 1
    header = (f"{'workload':<14} {'n':>4} {'python (s)':>11} "
              f"{'kernel (s)':>11} {'speedup':>8}  equal")
    print(header)
    print("-" * len(header))
    for name, counts, L, q, n in WORKLOADS:
        n = max(1, int(n * args.scale))
        t_py, out_py = run(name, counts, L, q, n, "fallback", args.seed)
        t_k, out_k = run(name, counts, L, q, n, "kernel", args.seed)
        equal = "yes" if out_py == out_k else "NO"
        print(f"{name:<14} {n:>4} {t_py:>11.3f} {t_k:>11.3f} "
              f"{t_py / t_k:>7.1f}x  {equal}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
