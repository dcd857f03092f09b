"""Finite-difference check of the analytic bandwidth gradient."""

from __future__ import annotations

import numpy as np

from .imagecore import ColorImage, DepthMap
from .solver import BandwidthField, SolverConfig, SolverState, bandwidth_gradient, objective

REL_FLOOR = 1e-8
# window radius for the small random instances; a 19x19 window on an 8x8 grid
# would be almost entirely clamped border copies
CHECK_RADIUS = 3
FD_STEP = 1e-6


def random_instance(seed: int, size: int = 8, cfg: SolverConfig | None = None):
    """Random depth, initial depth, guidance and bandwidth within the clamp range."""
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(seed)
    shape = (size, size)
    D = DepthMap(rng.uniform(0, 1, shape))
    D0 = DepthMap(rng.uniform(0, 1, shape))
    img = ColorImage(rng.uniform(0, 1, shape + (3,)))
    lam = BandwidthField(rng.uniform(cfg.lambda_min, cfg.lambda_max, shape), cfg.lambda_min, cfg.lambda_max)
    return SolverState(D, D0, lam), img


def numeric_gradient(state: SolverState, img: ColorImage, cfg: SolverConfig, h: float = FD_STEP) -> np.ndarray:
    lam = state.bandwidth.values
    out = np.empty_like(lam)
    for idx in np.ndindex(lam.shape):
        vals = []
        for step in (h, -h):
            shifted = lam.copy()
            shifted[idx] += step
            # the clamp range is not enforced here; the energy is smooth in lam
            bw = BandwidthField(shifted, min(cfg.lambda_min, shifted.min()), max(cfg.lambda_max, shifted.max()))
            vals.append(objective(state.depth_current, state.depth_init, img, bw, cfg))
        out[idx] = (vals[0] - vals[1]) / (2 * h)
    return out


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = REL_FLOOR) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def gradcheck(seed: int = 0, size: int = 8, cfg: SolverConfig | None = None,
              flip_regularizer: bool = False) -> float:
    """Max relative error between the analytic and central-difference gradients."""
    cfg = cfg or SolverConfig(patch_radius=CHECK_RADIUS)
    if cfg.alpha is None:
        cfg = cfg.for_factor(4)
    state, img = random_instance(seed, size, cfg)
    analytic = bandwidth_gradient(state, img, cfg, flip_regularizer=flip_regularizer)
    return relative_error(analytic, numeric_gradient(state, img, cfg))
