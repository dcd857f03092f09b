"""Compiled per-pixel sweeps.

Each sweep reads a frozen iterate and writes every output pixel from its own
window only, so rows can be split across threads without changing a single
bit of the result: the summation order inside a pixel is fixed (offsets in
row-major order).

The inner loops run over contiguous columns of edge-padded arrays so LLVM can
vectorize them.  ``_exp`` replaces libm's scalar ``exp`` for that reason; it
agrees with ``math.exp`` to a couple of ulp on the range used here.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

from .kernels import WEIGHT_FLOOR

_LOG2E = 1.4426950408889634
_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10


@intrinsic
def _bits_to_f64(typingctx, x):
    sig = types.float64(types.int64)

    def codegen(context, builder, signature, args):
        return builder.bitcast(args[0], ir.DoubleType())

    return sig, codegen


@njit(inline="always")
def _exp(x):
    # x <= 0 only; results below exp(-708) are floored by the callers anyway
    x = max(x, -708.0)
    k = math.floor(x * _LOG2E + 0.5)
    r = (x - k * _LN2_HI) - k * _LN2_LO
    p = 1.0 + r * (1.0 + r * (1.0 / 2 + r * (1.0 / 6 + r * (1.0 / 24 + r * (
        1.0 / 120 + r * (1.0 / 720 + r * (1.0 / 5040 + r * (1.0 / 40320 + r * (
            1.0 / 362880 + r * (1.0 / 3628800 + r * (1.0 / 39916800 + r * (
                1.0 / 479001600 + r * (1.0 / 6227020800)))))))))))))
    return p * _bits_to_f64((np.int64(k) + 1023) << 52)


@njit(cache=True)
def exp_array(x):
    """Vectorized ``exp`` for non-positive inputs (exposed for testing)."""
    out = np.empty_like(x)
    for i in range(x.size):
        out.flat[i] = _exp(x.flat[i])
    return out


@njit(nogil=True, cache=True, boundscheck=False)
def _robust_rows(Dp, D0p, Ip, lam, wtab, r, alpha, inv_c,
                 depth_out, obj_out, grad_out, r0, r1):
    H, W = depth_out.shape
    num = np.empty(W)
    den = np.empty(W)
    phi_d = np.empty(W)
    phi_s = np.empty(W)
    g_d = np.empty(W)
    g_s = np.empty(W)
    k2 = np.empty(W)
    wd_scale = 1.0 - alpha
    ws_scale = 2.0 * alpha
    for y in range(r0, r1):
        yc = y + r
        for x in range(W):
            num[x] = 0.0
            den[x] = 0.0
            phi_d[x] = 0.0
            phi_s[x] = 0.0
            g_d[x] = 0.0
            g_s[x] = 0.0
            k2[x] = 1.0 / (2.0 * lam[y, x] * lam[y, x])
        for dy in range(-r, r + 1):
            yn = yc + dy
            for dx in range(-r, r + 1):
                w = wtab[dy + r, dx + r]
                for x in range(W):
                    xc = x + r
                    xn = xc + dx
                    c0 = Ip[0, yc, xc] - Ip[0, yn, xn]
                    c1 = Ip[1, yc, xc] - Ip[1, yn, xn]
                    c2 = Ip[2, yc, xc] - Ip[2, yn, xn]
                    wc = max(_exp(-(c0 * c0 + c1 * c1 + c2 * c2) * inv_c), WEIGHT_FLOOR)
                    di = Dp[yc, xc]
                    d0j = D0p[yn, xn]
                    dj = Dp[yn, xn]
                    e0 = (di - d0j) * (di - d0j)
                    e1 = (di - dj) * (di - dj)
                    k = k2[x]
                    d = max(_exp(-e0 * k), WEIGHT_FLOOR)
                    s = max(_exp(-e1 * k), WEIGHT_FLOOR)
                    wt = w * wc
                    a_d = wd_scale * w * d
                    a_s = ws_scale * wt * s
                    num[x] += a_d * d0j + a_s * dj
                    den[x] += a_d + a_s
                    phi_d[x] += w * (1.0 - d)
                    phi_s[x] += wt * (1.0 - s)
                    g_d[x] += w * ((1.0 - d) - e0 * d * k)
                    g_s[x] += wt * ((1.0 - s) - e1 * s * k)
        for x in range(W):
            li = lam[y, x]
            v = num[x] / den[x]
            depth_out[y, x] = min(max(v, 0.0), 1.0)
            obj_out[y, x] = 2.0 * li * li * ((1.0 - alpha) * phi_d[x] + alpha * phi_s[x])
            grad_out[y, x] = 4.0 * li * ((1.0 - alpha) * g_d[x] + alpha * g_s[x])


@njit(nogil=True, cache=True, boundscheck=False)
def _mrf_rows(Dp, D0, Ip, r, alpha, inv_c, depth_out, obj_out, r0, r1):
    H, W = depth_out.shape
    num = np.empty(W)
    den = np.empty(W)
    sm = np.empty(W)
    for y in range(r0, r1):
        yc = y + r
        for x in range(W):
            num[x] = 0.0
            den[x] = 0.0
            sm[x] = 0.0
        for dy in range(-r, r + 1):
            yn = yc + dy
            for dx in range(-r, r + 1):
                for x in range(W):
                    xc = x + r
                    xn = xc + dx
                    c0 = Ip[0, yc, xc] - Ip[0, yn, xn]
                    c1 = Ip[1, yc, xc] - Ip[1, yn, xn]
                    c2 = Ip[2, yc, xc] - Ip[2, yn, xn]
                    wc = max(_exp(-(c0 * c0 + c1 * c1 + c2 * c2) * inv_c), WEIGHT_FLOOR)
                    dj = Dp[yn, xn]
                    diff = Dp[yc, xc] - dj
                    num[x] += wc * dj
                    den[x] += wc
                    sm[x] += wc * diff * diff
        for x in range(W):
            d0 = D0[y, x]
            v = ((1.0 - alpha) * d0 + 2.0 * alpha * num[x]) / ((1.0 - alpha) + 2.0 * alpha * den[x])
            depth_out[y, x] = min(max(v, 0.0), 1.0)
            e = Dp[yc, x + r] - d0
            obj_out[y, x] = (1.0 - alpha) * e * e + alpha * sm[x]


def _bands(height: int, threads: int):
    n = max(1, min(int(threads), height))
    edges = np.linspace(0, height, n + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run(fn, args, height: int, threads: int) -> None:
    bands = _bands(height, threads)
    if len(bands) == 1:
        fn(*args, 0, height)
        return
    with ThreadPoolExecutor(max_workers=len(bands)) as pool:
        futures = [pool.submit(fn, *args, a, b) for a, b in bands]
        for f in futures:
            f.result()


def _pad(a: np.ndarray, r: int) -> np.ndarray:
    return np.ascontiguousarray(np.pad(a, r, mode="edge"))


def _pad_color(img: np.ndarray, r: int) -> np.ndarray:
    chw = np.ascontiguousarray(np.moveaxis(img, 2, 0))
    return np.ascontiguousarray(np.pad(chw, ((0, 0), (r, r), (r, r)), mode="edge"))


def robust_sweep(D, D0, img, lam, wtab, alpha, sigma_c, threads=1):
    """One Jacobi sweep of the robust update.

    Returns ``(next_depth, objective_map, lambda_grad_map)`` all evaluated at
    the given ``(D, lam)``.  ``wtab`` is the normalized spatial table;
    ``objective_map`` and ``lambda_grad_map`` exclude the bandwidth
    regularizer.
    """
    r = (wtab.shape[0] - 1) // 2
    H, W = D.shape
    out = np.empty((H, W))
    obj = np.empty((H, W))
    grad = np.empty((H, W))
    inv_c = 1.0 / (6.0 * sigma_c * sigma_c)
    args = (_pad(D, r), _pad(D0, r), _pad_color(img, r), np.ascontiguousarray(lam, dtype=np.float64),
            np.ascontiguousarray(wtab, dtype=np.float64), r, float(alpha), inv_c, out, obj, grad)
    _run(_robust_rows, args, H, threads)
    return out, obj, grad


def mrf_sweep(D, D0, img, radius, alpha, sigma_c, threads=1):
    """One Jacobi sweep of the MRF baseline; returns ``(next_depth, objective_map)``."""
    r = int(radius)
    H, W = D.shape
    out = np.empty((H, W))
    obj = np.empty((H, W))
    inv_c = 1.0 / (6.0 * sigma_c * sigma_c)
    args = (_pad(D, r), np.ascontiguousarray(D0, dtype=np.float64), _pad_color(img, r), r,
            float(alpha), inv_c, out, obj)
    _run(_mrf_rows, args, H, threads)
    return out, obj
