"""Grid containers, border handling and bicubic interpolation.

Every grid is indexed ``(row, col)``.  Neighbour lookups outside the image
are resolved by replicate clamping, i.e. as if the image were padded with
copies of its outermost pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class DimensionError(ValueError):
    """Grids that must share a shape do not."""


class InputRangeError(ValueError):
    """A value lies outside the range declared for it."""


class GridShape(NamedTuple):
    height: int
    width: int

    def validate(self) -> "GridShape":
        if self.height < 1 or self.width < 1:
            raise DimensionError(f"grid must be at least 1x1, got {self.height}x{self.width}")
        return self


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def _check_unit_range(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise InputRangeError(f"{what} contains NaN or Inf")
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise InputRangeError(
            f"{what} must lie in [0, 1], got [{values.min():.6g}, {values.max():.6g}]"
        )


@dataclass(frozen=True)
class DepthMap:
    """Normalized depth in [0, 1], double precision.

    ``max_mm`` carries the metric scale of the source data when known, so
    errors can be reported in millimetres.
    """

    values: np.ndarray
    max_mm: float | None = field(default=None, compare=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise DimensionError(f"depth map must be 2-D, got shape {values.shape}")
        GridShape(*values.shape).validate()
        _check_unit_range(values, "depth map")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> GridShape:
        return GridShape(*self.values.shape)


@dataclass(frozen=True)
class ColorImage:
    """RGB guidance image, shape ``(H, W, 3)``, channels in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 3 or values.shape[2] != 3:
            raise DimensionError(f"color image must be (H, W, 3), got shape {values.shape}")
        GridShape(*values.shape[:2]).validate()
        _check_unit_range(values, "color image")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> GridShape:
        return GridShape(*self.values.shape[:2])


def clamp_coord(coord: tuple[int, int], shape: GridShape) -> tuple[int, int]:
    """Clamp a possibly out-of-image ``(row, col)`` onto the grid."""
    r, c = coord
    return (min(max(int(r), 0), shape[0] - 1), min(max(int(c), 0), shape[1] - 1))


@dataclass(frozen=True)
class Neighborhood:
    """Square window of ``(2*radius+1)**2`` offsets around ``center``."""

    center: tuple[int, int]
    radius: int
    offsets: tuple[tuple[int, int], ...]

    @classmethod
    def around(cls, center: tuple[int, int], radius: int) -> "Neighborhood":
        if radius < 0:
            raise ValueError("radius must be >= 0")
        span = range(-radius, radius + 1)
        return cls(tuple(center), int(radius), tuple((dy, dx) for dy in span for dx in span))

    def resolve(self, shape: GridShape) -> list[tuple[int, int]]:
        """In-image coordinate for every offset.  Duplicates are kept."""
        cy, cx = self.center
        return [clamp_coord((cy + dy, cx + dx), shape) for dy, dx in self.offsets]


def normalize_depth(raw, max_code: int) -> DepthMap:
    """Integer depth codes in ``[0, max_code]`` -> normalized :class:`DepthMap`."""
    if max_code <= 0:
        raise ValueError("max_code must be positive")
    raw = np.asarray(raw)
    if raw.size and (raw.min() < 0 or raw.max() > max_code):
        raise InputRangeError(
            f"depth codes must lie in [0, {max_code}], got [{raw.min()}, {raw.max()}]"
        )
    return DepthMap(raw.astype(np.float64) / max_code)


def denormalize_depth(depth: DepthMap, max_code: int) -> np.ndarray:
    """Quantize to integer codes, rounding half up."""
    codes = np.floor(depth.values * max_code + 0.5)
    dtype = np.uint8 if max_code <= 255 else np.uint16 if max_code <= 65535 else np.int64
    return np.clip(codes, 0, max_code).astype(dtype)


# -- bicubic ------------------------------------------------------------------

CUBIC_A = -0.5


def cubic_kernel(x, a: float = CUBIC_A):
    """Keys cubic convolution kernel."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2, x3 = x * x, x * x * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def cubic_weights(t: float) -> np.ndarray:
    """Weights of the four taps at distances ``1+t, t, 1-t, 2-t``."""
    return cubic_kernel(np.array([1.0 + t, t, 1.0 - t, 2.0 - t]))


def _resample_matrix(n_src: int, factor: int) -> np.ndarray:
    """(n_src*factor, n_src) interpolation matrix with clamped taps folded in."""
    n_dst = n_src * factor
    u = (np.arange(n_dst) + 0.5) / factor - 0.5
    base = np.floor(u).astype(np.int64)
    t = u - base
    mat = np.zeros((n_dst, n_src))
    rows = np.arange(n_dst)
    for k in range(4):
        idx = np.clip(base - 1 + k, 0, n_src - 1)
        w = cubic_kernel(t - (k - 1))
        np.add.at(mat, (rows, idx), w)
    return mat


def bicubic_upsample(src: DepthMap, factor: int) -> DepthMap:
    """Separable cubic-convolution upsampling by an integer factor.

    Output pixel ``x`` samples the source at ``(x + 0.5) / factor - 0.5``.
    """
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return src
    h, w = src.shape
    out = _resample_matrix(h, factor) @ src.values @ _resample_matrix(w, factor).T
    return DepthMap(np.clip(out, 0.0, 1.0), max_mm=src.max_mm)
