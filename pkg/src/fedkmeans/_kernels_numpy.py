"""Pure-numpy kernel implementations (fallback backend).

Same contracts as `_kernels_numba`; selected via FEDKMEANS_BACKEND=numpy
or automatically when numba is unavailable.
"""

from __future__ import annotations

import numpy as np


def assign_points(points: np.ndarray, centers: np.ndarray):
    """Nearest centroid per point (ties -> lowest index) and squared distance."""
    diff = points[:, None, :] - centers[None, :, :]
    d2 = np.einsum("nkd,nkd->nk", diff, diff)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(points.shape[0]), labels]


def update_min_sqdist(points: np.ndarray, center: np.ndarray, d2: np.ndarray) -> None:
    """In place: d2[i] = min(d2[i], ||points[i] - center||^2)."""
    diff = points - center[None, :]
    np.minimum(d2, np.einsum("nd,nd->n", diff, diff), out=d2)


def cluster_sums(points: np.ndarray, weights: np.ndarray, labels: np.ndarray, k: int):
    """Per-cluster weighted coordinate sums and weight totals."""
    d = points.shape[1]
    wsum = np.zeros((k, d), dtype=np.float64)
    np.add.at(wsum, labels, points * weights[:, None])
    wtot = np.bincount(labels, weights=weights, minlength=k).astype(np.float64)
    return wsum, wtot


def poly_roots_scan(h: np.ndarray, p: int, total_bins: int) -> np.ndarray:
    """All roots of h (ascending int64 coeffs, mod p) among 1..total_bins.

    Requires p < 2^31 so Horner products stay inside int64.
    """
    roots = []
    chunk = 1 << 16
    m = h.shape[0] - 1
    for lo in range(1, total_bins + 1, chunk):
        xs = np.arange(lo, min(lo + chunk, total_bins + 1), dtype=np.int64)
        vals = np.full(xs.shape[0], int(h[m]), dtype=np.int64)
        for i in range(m - 1, -1, -1):
            vals = (vals * xs + h[i]) % p
        roots.extend(xs[vals == 0].tolist())
    return np.asarray(roots, dtype=np.int64)
