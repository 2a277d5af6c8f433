"""Compare the numba kernels against the pure-numpy fallbacks.

Imports both implementation modules directly (bypassing the
FEDKMEANS_BACKEND dispatch) and times each hot kernel on representative
shapes, plus one end-to-end clustering run per backend.

Usage: python benchmarks/bench_backends.py
"""

import statistics
import time

import numpy as np

from fedkmeans import _kernels_numpy as knp

try:
    from fedkmeans import _kernels_numba as knb
except ImportError:
    knb = None

from fedkmeans.polyring import poly_mul


def timeit(fn, repeats=5, warmup=2):
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def row(name, t_numpy, t_numba):
    if t_numba is None:
        print(f"{name:<34} {t_numpy*1e3:>10.2f} ms {'-':>12}")
    else:
        print(f"{name:<34} {t_numpy*1e3:>10.2f} ms {t_numba*1e3:>9.2f} ms "
              f"{t_numpy/t_numba:>7.1f}x")


def main():
    rng = np.random.default_rng(0)
    points = rng.random((30_000, 10))
    centers = rng.random((10, 10))
    weights = np.ones(points.shape[0])
    labels, _ = knp.assign_points(points, centers)

    p = 10_007
    bins = sorted(rng.choice(np.arange(1, 500_000), size=24, replace=False).tolist())
    g = [1]
    for j in bins:
        g = poly_mul(g, [1, (-j) % p], p)
    h = np.asarray(g[::-1], dtype=np.int64)

    print(f"{'kernel':<34} {'numpy':>13} {'numba':>12} {'speedup':>8}")
    cases = [
        ("assign_points (30k x 10, K=10)",
         lambda impl: impl.assign_points(points, centers)),
        ("update_min_sqdist (30k x 10)",
         lambda impl: impl.update_min_sqdist(points, centers[0],
                                             np.full(points.shape[0], np.inf))),
        ("cluster_sums (30k x 10, K=10)",
         lambda impl: impl.cluster_sums(points, weights, labels, 10)),
        ("poly_roots_scan (deg 24, 5e5 bins)",
         lambda impl: impl.poly_roots_scan(h, p, 500_000)),
    ]
    for name, call in cases:
        t_np = timeit(lambda: call(knp))
        t_nb = timeit(lambda: call(knb)) if knb else None
        row(name, t_np, t_nb)

    if knb is not None:
        t_cz = timeit(lambda: knb.poly_roots_cz(h, p, 7))
        row("poly_roots_cz (deg 24, numba only)", t_cz, t_cz)

    # end-to-end: full clustering under each backend via the env flag
    import subprocess
    import sys

    code = (
        "import numpy as np, time\n"
        "from fedkmeans.clustering import WeightedDataset, kmeans_full\n"
        "from fedkmeans.rng import derive_generator\n"
        "from fedkmeans import kernels\n"
        "kernels.warmup()\n"
        "rng = np.random.default_rng(0)\n"
        "data = WeightedDataset(rng.random((30000, 10)))\n"
        "t0 = time.perf_counter()\n"
        "kmeans_full(data, 10, derive_generator(0, 1))\n"
        "print(f'{time.perf_counter() - t0:.3f}')\n"
    )
    print()
    for backend in ("numpy", "numba") if knb else ("numpy",):
        out = subprocess.run([sys.executable, "-c", code],
                             env={"PATH": "/usr/bin:/bin",
                                  "FEDKMEANS_BACKEND": backend},
                             capture_output=True, text=True, check=True)
        print(f"kmeans_full 30k x 10, K=10, backend={backend}: "
              f"{float(out.stdout.strip()):.3f} s")


if __name__ == "__main__":
    main()
