"""Robust guided upsampling: energy, fixed-point updates, bandwidth descent.

The energy for a depth map ``D`` given the interpolated input ``D0``, the
guidance image and a per-pixel bandwidth field ``lam`` is::

    E = (1-a) sum_i sum_j w_ij   phi(|D_i - D0_j|^2; lam_i)
      +   a   sum_i sum_j w~_ij  phi(|D_i - D_j|^2;  lam_i)
      +   b   sum_i |grad lam_i|^2

with ``w`` the normalized spatial window, ``w~`` the spatial window times the
guidance colour weight and ``phi`` the exponential error norm.  The classic
colour-weighted MRF upsampler is kept alongside as a baseline.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _sweep
from .imagecore import ColorImage, DepthMap, DimensionError, GridShape, bicubic_upsample
from .kernels import SpatialKernel

ALPHA_SCHEDULE = {2: 0.8, 4: 0.9, 8: 0.96, 16: 0.99}
MAX_ITERS_SCHEDULE = {2: 5, 4: 15, 8: 50, 16: 100}


class ConfigError(ValueError):
    """Invalid solver configuration or incompatible input geometry."""


def _nearest_schedule(table: dict, factor: int):
    # nearest in log2; ties go to the smaller factor
    key = min(table, key=lambda k: (abs(math.log2(k) - math.log2(max(factor, 1))), k))
    return table[key]


@dataclass(frozen=True)
class SolverConfig:
    """Scalar hyperparameters.

    ``alpha`` and ``max_iters`` may be left as ``None``; :meth:`for_factor`
    fills them from the per-factor schedules.
    """

    alpha: float | None = None
    beta: float = 0.3
    sigma_s: float = 9.0
    sigma_c: float = 10 / 255
    patch_radius: int = 9
    lambda_init: float = 7 / 255
    tau: float = 0.3
    lambda_min: float = 1 / 255
    lambda_max: float = 50 / 255
    max_iters: int | None = None
    tol: float = 1e-5
    adaptive_bandwidth: bool = True

    def __post_init__(self):
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0,1)")
        if not self.beta >= 0.0:
            raise ConfigError("beta must be >= 0")
        if not self.tau > 0.0:
            raise ConfigError("tau must be > 0")
        if not self.sigma_s > 0.0:
            raise ConfigError("sigma_s must be > 0")
        if not self.sigma_c > 0.0:
            raise ConfigError("sigma_c must be > 0")
        if int(self.patch_radius) != self.patch_radius or self.patch_radius < 0:
            raise ConfigError("patch_radius must be a non-negative integer")
        if not 0.0 < self.lambda_min < self.lambda_init < self.lambda_max:
            raise ConfigError("need 0 < lambda_min < lambda_init < lambda_max")
        if self.max_iters is not None and (int(self.max_iters) != self.max_iters or self.max_iters < 1):
            raise ConfigError("max_iters must be a positive integer")
        if not self.tol > 0.0:
            raise ConfigError("tol must be > 0")

    def for_factor(self, factor: int) -> "SolverConfig":
        """Fill unset ``alpha`` / ``max_iters`` from the schedules."""
        updates = {}
        if self.alpha is None:
            updates["alpha"] = _nearest_schedule(ALPHA_SCHEDULE, factor)
        if self.max_iters is None:
            updates["max_iters"] = _nearest_schedule(MAX_ITERS_SCHEDULE, factor)
        return dataclasses.replace(self, **updates) if updates else self

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def _alpha(self) -> float:
        if self.alpha is None:
            raise ConfigError("alpha is unset; call for_factor() first")
        return self.alpha


@dataclass(frozen=True)
class BandwidthField:
    """Per-pixel bandwidth of the error norm."""

    values: np.ndarray
    lambda_min: float = 1 / 255
    lambda_max: float = 50 / 255

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DimensionError(f"bandwidth field must be 2-D, got shape {values.shape}")
        GridShape(*values.shape).validate()
        if not np.all(np.isfinite(values)):
            raise ValueError("bandwidth field contains NaN or Inf")
        # tolerate rounding at the clamp bounds
        eps = 1e-12 * self.lambda_max
        if values.min() < self.lambda_min - eps or values.max() > self.lambda_max + eps:
            raise ValueError(
                f"bandwidth must lie in [{self.lambda_min}, {self.lambda_max}], "
                f"got [{values.min()}, {values.max()}]"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, shape, value: float, cfg: SolverConfig) -> "BandwidthField":
        return cls(np.full(tuple(shape), float(value)), cfg.lambda_min, cfg.lambda_max)

    @property
    def shape(self) -> GridShape:
        return GridShape(*self.values.shape)


@dataclass(frozen=True)
class SolverState:
    depth_current: DepthMap
    depth_init: DepthMap
    bandwidth: BandwidthField
    iteration: int = 0
    objective_trace: tuple = ()


@dataclass
class UpsampleReport:
    iterations_run: int
    final_objective: float
    objective_trace: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    alpha: float | None = None
    method: str = "ours"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# -- helpers --------------------------------------------------------------------

def _check_shapes(*grids) -> None:
    shapes = {tuple(g.shape) for g in grids}
    if len(shapes) != 1:
        raise DimensionError(f"grids must share one shape, got {sorted(shapes)}")


def _spatial_table(cfg: SolverConfig) -> np.ndarray:
    return SpatialKernel.build(int(cfg.patch_radius), cfg.sigma_s).normalized


def upsampling_factor(depth_shape, guide_shape) -> int:
    """Integer ratio between guidance and depth grids, or :class:`ConfigError`."""
    (h, w), (H, W) = depth_shape, guide_shape
    if H % h or W % w or H // h != W // w or H < h:
        raise ConfigError(
            f"non-integer upsampling factor: depth {h}x{w} vs guidance {H}x{W}"
        )
    return H // h


def regularizer(lam: np.ndarray) -> float:
    """``sum |grad lam|^2`` with forward differences (zero across the far border)."""
    gx = np.diff(lam, axis=1)
    gy = np.diff(lam, axis=0)
    return float(np.sum(gx * gx) + np.sum(gy * gy))


def discrete_laplacian(bw) -> np.ndarray:
    """5-point Laplacian with replicate borders."""
    lam = bw.values if isinstance(bw, BandwidthField) else np.asarray(bw, dtype=np.float64)
    p = np.pad(lam, 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * lam


def _sweep_at(D, D0, img, lam, cfg, threads):
    return _sweep.robust_sweep(D, D0, img, lam, _spatial_table(cfg), cfg._alpha(),
                               cfg.sigma_c, threads)


# -- public operations ----------------------------------------------------------

def objective(D: DepthMap, D0: DepthMap, img: ColorImage, bw: BandwidthField,
              cfg: SolverConfig, threads: int = 1) -> float:
    """Full energy including the bandwidth smoothness term."""
    _check_shapes(D, D0, img, bw)
    _, obj, _ = _sweep_at(D.values, D0.values, img.values, bw.values, cfg, threads)
    return float(np.sum(obj)) + cfg.beta * regularizer(bw.values)


def update_depth(state: SolverState, img: ColorImage, cfg: SolverConfig,
                 threads: int = 1) -> DepthMap:
    """One Jacobi fixed-point step of the robust depth update."""
    _check_shapes(state.depth_current, state.depth_init, img, state.bandwidth)
    out, _, _ = _sweep_at(state.depth_current.values, state.depth_init.values, img.values,
                          state.bandwidth.values, cfg, threads)
    return DepthMap(out, max_mm=state.depth_init.max_mm)


def bandwidth_gradient(state: SolverState, img: ColorImage, cfg: SolverConfig,
                       threads: int = 1, flip_regularizer: bool = False) -> np.ndarray:
    """Gradient of the energy with respect to every ``lam_i``.

    ``flip_regularizer`` reverses the sign of the regularizer term; it exists
    only so the finite-difference check can demonstrate that it catches a
    wrong sign.
    """
    _check_shapes(state.depth_current, state.depth_init, img, state.bandwidth)
    if np.any(state.bandwidth.values <= 0):
        raise ValueError("bandwidth must be positive")
    _, _, grad = _sweep_at(state.depth_current.values, state.depth_init.values, img.values,
                           state.bandwidth.values, cfg, threads)
    sign = 1.0 if flip_regularizer else -1.0
    return grad + sign * 2.0 * cfg.beta * discrete_laplacian(state.bandwidth)


def update_bandwidth(state: SolverState, grad: np.ndarray, cfg: SolverConfig) -> BandwidthField:
    """Steepest-descent step on the bandwidth, clamped to ``[lambda_min, lambda_max]``."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != tuple(state.bandwidth.shape):
        raise DimensionError("gradient shape does not match the bandwidth field")
    lam = np.clip(state.bandwidth.values - cfg.tau * grad, cfg.lambda_min, cfg.lambda_max)
    return BandwidthField(lam, cfg.lambda_min, cfg.lambda_max)


def upsample(DL: DepthMap, img: ColorImage, cfg: SolverConfig | None = None,
             threads: int = 1) -> tuple[DepthMap, BandwidthField, UpsampleReport]:
    """Upsample ``DL`` to the resolution of ``img``.

    Each iteration is one sweep at the current ``(D, lam)``; it yields the
    next depth map, the energy at the current point and the bandwidth
    gradient.  The bandwidth takes one descent step per sweep, starting from
    the second sweep so the first gradient is not taken at the raw bicubic
    input.
    """
    t0 = time.perf_counter()
    factor = upsampling_factor(DL.shape, img.shape)
    cfg = (cfg or SolverConfig()).for_factor(factor)
    D0 = bicubic_upsample(DL, factor)
    table = _spatial_table(cfg)
    alpha = cfg._alpha()
    lam = np.full(tuple(img.shape), cfg.lambda_init)
    D = D0.values
    trace = []
    converged = False
    iters = 0
    for n in range(cfg.max_iters):
        nxt, obj, grad = _sweep.robust_sweep(D, D0.values, img.values, lam, table, alpha,
                                             cfg.sigma_c, threads)
        trace.append(float(np.sum(obj)) + cfg.beta * regularizer(lam))
        if cfg.adaptive_bandwidth and n >= 1:
            g = grad - 2.0 * cfg.beta * discrete_laplacian(lam)
            lam = np.clip(lam - cfg.tau * g, cfg.lambda_min, cfg.lambda_max)
        delta = float(np.max(np.abs(nxt - D)))
        D = nxt
        iters = n + 1
        if delta < cfg.tol:
            converged = True
            break
    _, obj, _ = _sweep.robust_sweep(D, D0.values, img.values, lam, table, alpha, cfg.sigma_c,
                                    threads)
    trace.append(float(np.sum(obj)) + cfg.beta * regularizer(lam))
    report = UpsampleReport(iterations_run=iters, final_objective=trace[-1],
                            objective_trace=trace, converged=converged,
                            wall_time=time.perf_counter() - t0, alpha=alpha, method="ours")
    bw = BandwidthField(lam, cfg.lambda_min, cfg.lambda_max)
    return DepthMap(D, max_mm=DL.max_mm), bw, report


def mrf_objective(D: DepthMap, D0: DepthMap, img: ColorImage, cfg: SolverConfig) -> float:
    """Baseline energy: pixelwise L2 data term plus colour-weighted L2 smoothness."""
    _check_shapes(D, D0, img)
    _, obj = _sweep.mrf_sweep(D.values, D0.values, img.values, cfg.patch_radius, cfg._alpha(),
                              cfg.sigma_c)
    return float(np.sum(obj))


def mrf_step(D: DepthMap, D0: DepthMap, img: ColorImage, cfg: SolverConfig,
             threads: int = 1) -> DepthMap:
    """One Jacobi step of the baseline update."""
    _check_shapes(D, D0, img)
    out, _ = _sweep.mrf_sweep(D.values, D0.values, img.values, cfg.patch_radius, cfg._alpha(),
                              cfg.sigma_c, threads)
    return DepthMap(out, max_mm=D0.max_mm)


def mrf_upsample(DL: DepthMap, img: ColorImage, cfg: SolverConfig | None = None,
                 threads: int = 1) -> tuple[DepthMap, UpsampleReport]:
    """Colour-weighted MRF baseline with the same window, ``sigma_c`` and stopping rule."""
    t0 = time.perf_counter()
    factor = upsampling_factor(DL.shape, img.shape)
    cfg = (cfg or SolverConfig()).for_factor(factor)
    alpha = cfg._alpha()
    D0 = bicubic_upsample(DL, factor).values
    D = D0
    trace = []
    converged = False
    iters = 0
    for n in range(cfg.max_iters):
        nxt, obj = _sweep.mrf_sweep(D, D0, img.values, cfg.patch_radius, alpha, cfg.sigma_c,
                                    threads)
        trace.append(float(np.sum(obj)))
        delta = float(np.max(np.abs(nxt - D)))
        D = nxt
        iters = n + 1
        if delta < cfg.tol:
            converged = True
            break
    _, obj = _sweep.mrf_sweep(D, D0, img.values, cfg.patch_radius, alpha, cfg.sigma_c, threads)
    trace.append(float(np.sum(obj)))
    report = UpsampleReport(iterations_run=iters, final_objective=trace[-1],
                            objective_trace=trace, converged=converged,
                            wall_time=time.perf_counter() - t0, alpha=alpha, method="mrf")
    return DepthMap(D, max_mm=DL.max_mm), report
