"""Scalar weights and the exponential error norm.

These are the per-pair building blocks of the energy.  The solver evaluates
the same expressions inside compiled sweeps; the functions here are the
readable reference versions and are what the unit tests pin down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imagecore import ColorImage, clamp_coord

# Lower bound applied to every weight so update denominators stay positive.
WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True)
class SpatialKernel:
    """Gaussian spatial window over a ``(2r+1)x(2r+1)`` patch.

    Clamped neighbours keep their own offset weight, so the normalizer is the
    same for every pixel, border pixels included.
    """

    radius: int
    sigma_s: float
    table: np.ndarray

    @classmethod
    def build(cls, radius: int, sigma_s: float) -> "SpatialKernel":
        if radius < 0:
            raise ValueError("radius must be >= 0")
        if sigma_s <= 0:
            raise ValueError("sigma_s must be positive")
        o = np.arange(-radius, radius + 1, dtype=np.float64)
        table = np.exp(-(o[:, None] ** 2 + o[None, :] ** 2) / (2.0 * sigma_s**2))
        table.setflags(write=False)
        return cls(int(radius), float(sigma_s), table)

    @property
    def normalizer(self) -> float:
        return float(self.table.sum())

    def normalizer_at(self, pixel) -> float:
        # independent of the pixel under replicate clamping
        return self.normalizer

    @property
    def normalized(self) -> np.ndarray:
        return self.table / self.normalizer


@dataclass(frozen=True)
class RobustNormParams:
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"bandwidth must be positive, got {self.lam}")


def spatial_weight(i, j, kernel: SpatialKernel) -> float:
    """Normalized Gaussian weight between pixel ``i`` and window member ``j``.

    ``j`` is given in unclamped coordinates, i.e. ``j - i`` is the offset.
    """
    dy, dx = j[0] - i[0], j[1] - i[1]
    r = kernel.radius
    if abs(dy) > r or abs(dx) > r:
        raise ValueError(f"offset ({dy}, {dx}) is outside the radius-{r} window")
    return float(kernel.table[dy + r, dx + r]) / kernel.normalizer


def color_weight(img: ColorImage, i, j, sigma_c: float) -> float:
    """Guidance similarity ``exp(-sum_k |I_i^k - I_j^k|^2 / (3 * 2 sigma_c^2))``."""
    shape = img.shape
    a = img.values[clamp_coord(i, shape)]
    b = img.values[clamp_coord(j, shape)]
    dist2 = float(np.sum((a - b) ** 2))
    return max(math.exp(-dist2 / (6.0 * sigma_c * sigma_c)), WEIGHT_FLOOR)


def combined_weight(img: ColorImage, i, j, kernel: SpatialKernel, sigma_c: float) -> float:
    return color_weight(img, i, j, sigma_c) * spatial_weight(i, j, kernel)


def exp_error_norm(x_sq: float, params: RobustNormParams) -> float:
    """``2 lam^2 (1 - exp(-x^2 / (2 lam^2)))``; saturates at ``2 lam^2``."""
    two_l2 = 2.0 * params.lam * params.lam
    return -two_l2 * math.expm1(-x_sq / two_l2)


def exp_error_norm_deriv(x_sq: float, params: RobustNormParams) -> float:
    """Derivative of :func:`exp_error_norm` with respect to ``x_sq``."""
    return math.exp(-x_sq / (2.0 * params.lam * params.lam))


def exp_error_norm_dlam(x_sq: float, params: RobustNormParams) -> float:
    """Derivative of :func:`exp_error_norm` with respect to the bandwidth."""
    lam = params.lam
    d = exp_error_norm_deriv(x_sq, params)
    return 4.0 * lam * (1.0 - d) - 2.0 * x_sq * d / lam
