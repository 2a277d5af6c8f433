"""Backend equivalence: the numba kernels and the numpy fallbacks must
agree on the same inputs (exactly for integer outputs, to float tolerance
for distances)."""

import numpy as np
import pytest

from fedkmeans import _kernels_numpy as knp
from fedkmeans import kernels

numba_kernels = pytest.importorskip("fedkmeans._kernels_numba")


@pytest.fixture(scope="module")
def cloud():
    rng = np.random.default_rng(7)
    points = rng.random((500, 6))
    centers = rng.random((9, 6))
    return points, centers


def test_backend_resolution():
    assert kernels.BACKEND in ("numba", "numpy")


def test_assign_points_agree(cloud):
    points, centers = cloud
    l1, d1 = numba_kernels.assign_points(points, centers)
    l2, d2 = knp.assign_points(points, centers)
    assert np.array_equal(l1, l2)
    assert np.allclose(d1, d2, rtol=1e-12, atol=1e-12)


def test_assign_tie_breaks_to_lowest_index():
    points = np.array([[0.0, 0.0]])
    centers = np.array([[1.0, 0.0], [-1.0, 0.0]])
    for impl in (numba_kernels, knp):
        labels, _ = impl.assign_points(points, centers)
        assert labels[0] == 0


def test_update_min_sqdist_agree(cloud):
    points, centers = cloud
    d1 = np.full(points.shape[0], np.inf)
    d2 = np.full(points.shape[0], np.inf)
    for c in centers:
        numba_kernels.update_min_sqdist(points, c, d1)
        knp.update_min_sqdist(points, c, d2)
    assert np.allclose(d1, d2, rtol=1e-12, atol=1e-12)


def test_cluster_sums_agree(cloud):
    points, centers = cloud
    rng = np.random.default_rng(8)
    weights = rng.random(points.shape[0]) + 0.5
    labels, _ = knp.assign_points(points, centers)
    s1, t1 = numba_kernels.cluster_sums(points, weights, labels, centers.shape[0])
    s2, t2 = knp.cluster_sums(points, weights, labels, centers.shape[0])
    assert np.allclose(s1, s2)
    assert np.allclose(t1, t2)


def test_poly_roots_scan_agree():
    p = 10_007
    # g for bins {3, 50, 999}: h coefficients reversed
    from fedkmeans.polyring import poly_mul
    g = [1]
    for j in (3, 50, 999):
        g = poly_mul(g, [1, (-j) % p], p)
    h = np.asarray(g[::-1], dtype=np.int64)
    r1 = sorted(int(v) for v in numba_kernels.poly_roots_scan(h, p, 1000))
    r2 = sorted(int(v) for v in knp.poly_roots_scan(h, p, 1000))
    assert r1 == r2 == [3, 50, 999]


def test_env_flag_forces_numpy_backend():
    import subprocess
    import sys

    code = ("import fedkmeans.kernels as k; "
            "print(k.BACKEND, k.HAS_CZ_KERNEL)")
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "FEDKMEANS_BACKEND": "numpy"},
        capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "False"]
