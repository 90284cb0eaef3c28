"""Time the numba kernels against their pure-numpy fallbacks.

Run directly:

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one table row per kernel and problem size. The numba column is
skipped when numba is unavailable or POSEBENCH_NO_NUMBA is set.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from posebench import _kernels


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_welford(rng, repeat: int):
    rows = []
    for n, dim in ((2_000, 51), (20_000, 51)):
        batch = rng.normal(size=(n, dim))
        for label, fn in _paths("welford_update"):
            mean = np.zeros(dim)
            m2 = np.zeros(dim)
            fn(0, mean, m2, batch[:1])  # warm up compilation outside the timer
            def call():
                mean[:] = 0.0
                m2[:] = 0.0
                fn(0, mean, m2, batch)
            rows.append((f"welford n={n}", label, _best_of(call, repeat)))
    return rows


def bench_knn(rng, repeat: int):
    rows = []
    for stored_n, query_n, dim in ((5_000, 500, 816), (20_000, 500, 816)):
        stored = rng.normal(size=(stored_n, dim))
        queries = rng.normal(size=(query_n, dim))
        for label, fn in _paths("knn_mean_distance"):
            fn(stored[:64], queries[:4], 3)
            rows.append(
                (f"knn stored={stored_n}", label, _best_of(lambda: fn(stored, queries, 3), repeat))
            )
    return rows


def bench_iou(rng, repeat: int):
    rows = []
    for n_frames, per_frame in ((2_000, 6), (10_000, 6)):
        total = n_frames * per_frame
        x1 = rng.uniform(0, 1000, size=total)
        y1 = rng.uniform(0, 600, size=total)
        boxes = np.column_stack([x1, y1, x1 + rng.uniform(5, 120, total), y1 + rng.uniform(5, 120, total)])
        offsets = np.arange(0, total + 1, per_frame, dtype=np.int64)
        for label, fn in _paths("max_iou_per_group"):
            fn(boxes[: 4 * per_frame], offsets[:5])
            rows.append(
                (f"iou frames={n_frames}", label, _best_of(lambda: fn(boxes, offsets), repeat))
            )
    return rows


def _paths(name: str):
    out = [("numpy", getattr(_kernels, f"{name}_np"))]
    nb = getattr(_kernels, f"{name}_nb", None)
    if nb is not None and _kernels.HAVE_NUMBA:
        out.append(("numba", nb))
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions, best is kept")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    rows += bench_welford(rng, args.repeat)
    rows += bench_knn(rng, args.repeat)
    rows += bench_iou(rng, args.repeat)

    print(f"active path: {_kernels.active_path()}")
    print(f"{'case':<22} {'path':<6} {'best (ms)':>10}")
    for case, label, seconds in rows:
        print(f"{case:<22} {label:<6} {seconds * 1e3:>10.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
