"""Timing comparison between the compiled kernels and their numpy twins.

Runs each kernel on a batch of representative inputs, checks that both paths
agree bitwise, and prints per-kernel timings plus the speedup. The compiled
path warms up first so compilation time is reported separately.

Usage: python3 benchmarks/bench_kernels.py [--sites N] [--repeat R]
"""

import argparse
import time

import numpy as np

from meshplan.kernels import (
    NUMBA_ENABLED,
    adjacency_csr,
    bfs_hops_multi,
    bfs_hops_multi_py,
    crowding_distance_kernel,
    crowding_distance_py,
    pareto_mask,
    pareto_mask_py,
)


def _grid_adjacency(side: int) -> np.ndarray:
    n = side * side
    adj = np.zeros((n, n), dtype=np.uint8)
    for r in range(side):
        for c in range(side):
            j = r * side + c
            if r + 1 < side:
                adj[j, j + side] = adj[j + side, j] = 1
            if c + 1 < side:
                adj[j, j + 1] = adj[j + 1, j] = 1
    return adj


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--side", type=int, default=30, help="grid side length")
    parser.add_argument("--points", type=int, default=400, help="objective rows")
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    adj = _grid_adjacency(args.side)
    n = adj.shape[0]
    indptr, indices = adjacency_csr(adj)
    sources = np.arange(0, n, max(1, n // 20), dtype=np.int32)
    points = rng.random((args.points, 4))

    if not NUMBA_ENABLED:
        print("compiled path disabled (MESHPLAN_NUMBA=0); nothing to compare")
        return

    t0 = time.perf_counter()
    bfs_hops_multi(indptr, indices, sources, n)
    pareto_mask(points)
    crowding_distance_kernel(points)
    print(f"warmup/compile: {time.perf_counter() - t0:.2f}s")

    cases = [
        (
            "bfs_hops_multi",
            lambda: bfs_hops_multi(indptr, indices, sources, n),
            lambda: bfs_hops_multi_py(indptr, indices, sources, n),
        ),
        (
            "pareto_mask",
            lambda: pareto_mask(points),
            lambda: pareto_mask_py(points),
        ),
        (
            "crowding_distance",
            lambda: crowding_distance_kernel(points),
            lambda: crowding_distance_py(points),
        ),
    ]
    print(f"{'kernel':<20}{'compiled':>12}{'numpy':>12}{'speedup':>10}")
    for name, fast, slow in cases:
        if not np.array_equal(np.asarray(fast()), np.asarray(slow())):
            raise AssertionError(f"{name}: compiled and numpy paths disagree")
        t_fast = _time(fast, args.repeat)
        t_slow = _time(slow, args.repeat)
        print(
            f"{name:<20}{t_fast * 1e3:>10.2f}ms{t_slow * 1e3:>10.2f}ms"
            f"{t_slow / t_fast:>9.1f}x"
        )


if __name__ == "__main__":
    main()
