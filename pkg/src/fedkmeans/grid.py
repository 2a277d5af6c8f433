"""Uniform quantization grid and bin-index flattening.

Points in the unit hypercube centered at the origin are quantized per
dimension to the nearest multiple of the step gamma (ties toward the
lower integer), and the per-dimension bin coordinates are flattened to a
1-based index. Index 0 is reserved: bin indices double as nonzero field
evaluation points in the aggregation protocol.

With B = 1/gamma and y in the closed interval [-1/2, 1/2], the nearest-
multiple quantizer reaches B+1 distinct integers per dimension (both
edges for even B, the y=-1/2 tie for odd B), so the grid carries
bins_per_dim = B+1 and total_bins = (B+1)^d.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, GridRangeError

_HALF = 0.5
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class ScaleTransform:
    """Affine map taking raw data into [-1/2, 1/2]^d.

    Degenerate (constant) dimensions map to 0 and invert back to the
    constant.
    """

    center: np.ndarray  # (d,)
    scale: np.ndarray   # (d,)``1/(max-min)``, 0 for degenerate dims

    def apply(self, points: np.ndarray) -> np.ndarray:
        out = (np.asarray(points, dtype=np.float64) - self.center) * self.scale
        # Rounding can push extremes a few ulp past the face; clip exactly.
        return np.clip(out, -_HALF, _HALF)

    def invert(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        safe = np.where(self.scale > 0, self.scale, 1.0)
        return np.where(self.scale > 0, pts / safe, 0.0) + self.center


def fit_scale(dataset: np.ndarray) -> ScaleTransform:
    """Fit the per-dimension affine map onto the origin-centered cube."""
    pts = np.asarray(dataset, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise DataError("dataset must be a nonempty n x d matrix")
    if not np.all(np.isfinite(pts)):
        raise DataError("dataset contains non-finite entries")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    scale = np.where(span > 0, 1.0 / np.where(span > 0, span, 1.0), 0.0)
    return ScaleTransform(center=(lo + hi) / 2.0, scale=scale)


@dataclass(frozen=True)
class GridSpec:
    """Quantization grid: step gamma with B = 1/gamma bins nominal per dim.

    ``shift`` is the optional shared random offset (one vector for the
    whole run, drawn from the orchestrator seed). It is a simulation
    shortcut, not a cryptographic agreement protocol, and is off by
    default; enabling it widens the per-dimension range by one bin.
    """

    gamma: float
    dim: int
    shift: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if not (0 < self.gamma <= 1):
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        b = round(1.0 / self.gamma)
        if b < 1 or abs(b * self.gamma - 1.0) >= 1e-9:
            raise ValueError(f"1/gamma must be an integer, got gamma={self.gamma}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.shift is not None:
            s = np.asarray(self.shift, dtype=np.float64)
            if s.shape != (self.dim,) or np.any(s < 0) or np.any(s >= self.gamma):
                raise ValueError("shift must be a d-vector in [0, gamma)")
            object.__setattr__(self, "shift", s)

    @property
    def bins_nominal(self) -> int:
        """B = 1/gamma."""
        return round(1.0 / self.gamma)

    @property
    def bins_per_dim(self) -> int:
        extra = 2 if self.shift is not None else 1
        return self.bins_nominal + extra

    @property
    def offset(self) -> int:
        """Added to raw quantizer outputs to make coordinates nonnegative."""
        b = self.bins_nominal
        return (b + 3) // 2 if self.shift is not None else (b + 1) // 2

    @property
    def total_bins(self) -> int:
        return self.bins_per_dim ** self.dim

    def quantize(self, point: np.ndarray) -> np.ndarray:
        """Per-dimension nearest-multiple integers a(y), ties toward lower."""
        y = np.asarray(point, dtype=np.float64)
        if y.shape != (self.dim,):
            raise GridRangeError(f"expected a {self.dim}-vector, got shape {y.shape}")
        if np.any(np.abs(y) > _HALF + _EDGE_TOL):
            raise GridRangeError("coordinate outside the unit hypercube")
        y = np.clip(y, -_HALF, _HALF)
        if self.shift is not None:
            y = y - self.shift
        b = self.bins_nominal
        # ceil(y*B - 1/2) = argmin_j |y - j/B| with midpoint ties going down.
        return np.ceil(y * b - _HALF).astype(np.int64)

    def reconstruct(self, quantized: np.ndarray) -> np.ndarray:
        """Reconstruction point gamma * a per dimension."""
        rec = np.asarray(quantized, dtype=np.float64) * self.gamma
        if self.shift is not None:
            rec = rec + self.shift
        return rec

    def coords(self, quantized: np.ndarray) -> np.ndarray:
        """Offset raw quantizer outputs into [0, bins_per_dim - 1]."""
        return np.asarray(quantized, dtype=np.int64) + self.offset

    def bin_index(self, point: np.ndarray) -> int:
        return flatten_index(self.coords(self.quantize(point)), self.bins_per_dim)

    def bin_coords(self, index: int) -> np.ndarray:
        return unflatten_index(index, self.bins_per_dim, self.dim)

    def bin_center(self, index: int) -> np.ndarray:
        """Reconstruction point of the bin with 1-based flattened index."""
        return self.reconstruct(self.bin_coords(index) - self.offset)


def grid_for(gamma: float | None, dim: int, n_total: int,
             shift: np.ndarray | None = None) -> GridSpec:
    """Build a grid, defaulting gamma to the 1/sqrt(n) rule.

    The default rounds B = sqrt(n) to the nearest integer >= 1 so that
    1/gamma is integral.
    """
    if gamma is None:
        b = max(1, round(float(n_total) ** 0.5))
        gamma = 1.0 / b
    return GridSpec(gamma=float(gamma), dim=dim, shift=shift)


def flatten_index(coords: np.ndarray, radix: int) -> int:
    """Mixed-radix bijection from [0, radix-1]^d onto [1, radix^d].

    j = 1 + sum_m coords[m] * radix^m, dimension 0 fastest.
    """
    c = np.asarray(coords, dtype=np.int64)
    if np.any(c < 0) or np.any(c >= radix):
        raise GridRangeError(f"coordinates {c.tolist()} outside [0, {radix - 1}]")
    j = 0
    for v in c[::-1]:
        j = j * radix + int(v)
    return j + 1


def unflatten_index(index: int, radix: int, dim: int) -> np.ndarray:
    """Inverse of flatten_index."""
    if not 1 <= index <= radix ** dim:
        raise GridRangeError(f"index {index} outside [1, {radix ** dim}]")
    rem = index - 1
    out = np.empty(dim, dtype=np.int64)
    for m in range(dim):
        out[m] = rem % radix
        rem //= radix
    return out
