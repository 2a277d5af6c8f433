"""Backend dispatch for the hot numeric kernels.

The numba backend is the default when numba imports cleanly; set
FEDKMEANS_BACKEND=numpy to force the pure-numpy fallback (or
FEDKMEANS_BACKEND=numba to fail loudly if numba is broken). The choice
is resolved once at import time; `benchmarks/bench_backends.py` imports
both implementation modules directly to compare them.
"""

from __future__ import annotations

import os

_requested = os.environ.get("FEDKMEANS_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"FEDKMEANS_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba  # noqa: F401
        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        BACKEND = "numpy"

if BACKEND == "numba":
    from ._kernels_numba import (
        assign_points,
        cluster_sums,
        poly_roots_cz,
        poly_roots_scan,
        update_min_sqdist,
        warmup,
    )
    HAS_CZ_KERNEL = True
else:
    from ._kernels_numpy import (  # noqa: F401
        assign_points,
        cluster_sums,
        poly_roots_scan,
        update_min_sqdist,
    )
    poly_roots_cz = None
    HAS_CZ_KERNEL = False

    def warmup() -> None:
        return None

__all__ = [
    "BACKEND",
    "HAS_CZ_KERNEL",
    "assign_points",
    "cluster_sums",
    "poly_roots_cz",
    "poly_roots_scan",
    "update_min_sqdist",
    "warmup",
]
