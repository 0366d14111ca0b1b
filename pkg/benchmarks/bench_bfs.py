"""Time the numba BFS kernel against the numpy fallback on a few graph families.

    python3 benchmarks/bench_bfs.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from coarse_minor import _kernels
from coarse_minor.generators import generate

FAMILIES = ["path:100000", "cycle:100000", "grid:300,300", "random-tree:100000,1", "theta:3,20000"]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba is unavailable; only the numpy backend can be timed")
    print(f"{'graph':<22}{'n':>9}{'numpy ms':>11}{'numba ms':>11}{'speedup':>9}")
    for spec in FAMILIES:
        g = generate(spec)
        src = np.array([0], dtype=np.int64)
        mask = np.ones(g.n, dtype=np.bool_)
        mask[g.n // 2] = False
        t_np, d_np = best_of(lambda: _kernels._bfs_numpy(g.indptr, g.indices, src, mask, -1),
                             args.repeat)
        row = f"{spec:<22}{g.n:>9}{t_np * 1e3:>11.2f}"
        if _kernels.HAVE_NUMBA:
            _kernels._bfs_numba(g.indptr, g.indices, src, mask, True, -1)  # compile
            t_nb, d_nb = best_of(lambda: _kernels._bfs_numba(g.indptr, g.indices, src, mask, True, -1),
                                 args.repeat)
            assert np.array_equal(d_np, d_nb), spec
            row += f"{t_nb * 1e3:>11.2f}{t_np / t_nb:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
