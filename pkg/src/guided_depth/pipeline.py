"""Degrade / upsample / evaluate benchmark machinery.

Dataset layout for :func:`run_benchmark`::

    dataset_dir/
        <scene>/depth.pgm   (or depth.pfm)   ground-truth depth
        <scene>/color.ppm                    guidance image, same size

Ground truth is centre-cropped to a multiple of the factor, block-averaged
down and corrupted with seeded Gaussian noise.  Every method sees the same
degraded input for a given scene and factor.
"""

from __future__ import annotations

import json
import logging
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .imagecore import ColorImage, DepthMap, DimensionError, bicubic_upsample
from .solver import SolverConfig, mrf_upsample, upsample

log = logging.getLogger(__name__)

METHODS = ("bicubic", "mrf", "ours")
DEFAULT_NOISE = 5 / 255


@dataclass(frozen=True)
class DegradeSpec:
    factor: int = 4
    noise_sigma: float = DEFAULT_NOISE
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.factor) != self.factor or self.factor < 1:
            raise ValueError("factor must be an integer >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass
class BenchResult:
    scene: str
    factor: int
    method: str
    rmse_255: float | None
    rmse_mm: float | None = None
    iterations: int = 0
    seconds: float | None = None
    error: str | None = None

    def record(self) -> dict:
        rec = asdict(self)
        if rec["error"] is None:
            del rec["error"]
        return rec


def center_crop(arr: np.ndarray, factor: int) -> np.ndarray:
    h, w = arr.shape[:2]
    hh, ww = h - h % factor, w - w % factor
    if hh == 0 or ww == 0:
        raise DimensionError(f"{h}x{w} image is smaller than factor {factor}")
    y0, x0 = (h - hh) // 2, (w - ww) // 2
    return arr[y0:y0 + hh, x0:x0 + ww]


def degrade(gt: DepthMap, spec: DegradeSpec) -> DepthMap:
    """Block-average downsample, add seeded Gaussian noise, clamp to [0, 1]."""
    f = int(spec.factor)
    h, w = gt.shape
    if h % f or w % f:
        raise DimensionError(f"{h}x{w} is not divisible by factor {f}; crop first")
    low = gt.values.reshape(h // f, f, w // f, f).mean(axis=(1, 3))
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        low = low + rng.normal(0.0, spec.noise_sigma, low.shape)
    return DepthMap(np.clip(low, 0.0, 1.0), max_mm=gt.max_mm)


def rmse(a: DepthMap, b: DepthMap, scale: str = "unit_255", max_mm: float | None = None) -> float:
    """Root mean square error on the [0, 255] scale or in millimetres."""
    if tuple(a.shape) != tuple(b.shape):
        raise DimensionError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    err = float(np.sqrt(np.mean((a.values - b.values) ** 2)))
    if scale == "unit_255":
        return err * 255.0
    if scale == "millimeters":
        if max_mm is None:
            raise ValueError("millimetre scale needs max_mm")
        return err * max_mm
    raise ValueError(f"unknown scale {scale!r}")


# -- synthetic scenes -------------------------------------------------------------

def make_synthetic_scene(size=(128, 128), depth_step: float = 50 / 255, edge_offset_px: int = 0,
                         texture: str = "none", seed: int = 0, *, base_depth: float = 0.4,
                         color_step: float = 0.4, stripe_width: int = 4,
                         texture_amplitude: float = 0.3, color_noise: float = 1 / 255):
    """Two-region piecewise-constant depth with a (possibly displaced) colour edge.

    The depth steps by ``depth_step`` at column ``W // 2``; the colour edge
    sits at ``W // 2 + edge_offset_px`` with contrast ``color_step`` (0 gives
    a guidance image with no edge at all).  ``texture`` adds vertical stripes
    or a checkerboard of period ``2 * stripe_width`` over the whole image.
    """
    h, w = (size, size) if np.isscalar(size) else size
    if abs(edge_offset_px) >= w / 4:
        raise ValueError("edge_offset_px must be smaller than width / 4")
    if texture not in ("none", "stripes", "checker"):
        raise ValueError(f"unknown texture {texture!r}")
    edge = w // 2
    depth = np.full((h, w), base_depth)
    depth[:, edge:] += depth_step

    cols = np.arange(w)
    gray = np.full((h, w), 0.5 - color_step / 2)
    gray[:, cols >= edge + edge_offset_px] += color_step
    if texture != "none":
        gray = gray + texture_amplitude * (texture_pattern((h, w), texture, stripe_width) / 2)
    tint = np.array([1.0, 0.9, 0.8])
    rgb = gray[..., None] * tint
    if color_noise > 0:
        rgb = rgb + np.random.default_rng(seed).normal(0.0, color_noise, rgb.shape)
    return DepthMap(np.clip(depth, 0, 1)), ColorImage(np.clip(rgb, 0, 1))


def texture_pattern(shape, texture: str = "stripes", stripe_width: int = 4) -> np.ndarray:
    """The +-1 pattern used by :func:`make_synthetic_scene`."""
    h, w = shape
    cx = (np.arange(w) // stripe_width) % 2
    if texture == "stripes":
        p = np.broadcast_to(cx[None, :], (h, w))
    else:
        cy = (np.arange(h) // stripe_width) % 2
        p = cy[:, None] ^ cx[None, :]
    return np.where(p == 1, 1.0, -1.0)


def stripe_correlation(depth: DepthMap, pattern: np.ndarray) -> float:
    """Absolute Pearson correlation between a depth map and a texture pattern."""
    v = depth.values.ravel()
    if v.std() == 0:
        return 0.0
    return float(abs(np.corrcoef(v, np.asarray(pattern, dtype=np.float64).ravel())[0, 1]))


def edge_contrast(depth: DepthMap, column: int) -> float:
    """Mean absolute jump between columns ``column - 1`` and ``column``."""
    v = depth.values
    return float(np.mean(np.abs(v[:, column] - v[:, column - 1])))


SYNTHETIC_SCENES = {
    "aligned": dict(edge_offset_px=0, texture="none"),
    "misaligned": dict(edge_offset_px=6, texture="none"),
    "no_color_edge": dict(edge_offset_px=0, texture="none", color_step=0.0),
    "texture": dict(depth_step=0.0, texture="stripes"),
}


def synthetic_dataset(size=(128, 128), seed: int = 0):
    """``{name: (gt, guide)}`` for the built-in probe scenes."""
    return {name: make_synthetic_scene(size, seed=seed, **kw) for name, kw in SYNTHETIC_SCENES.items()}


# -- benchmark --------------------------------------------------------------------

def load_scene(scene_dir: Path):
    from .formats import DepthEncoding, FLOAT_MAP, encoding_for, read_color, read_depth

    pfm, pgm = scene_dir / "depth.pfm", scene_dir / "depth.pgm"
    if pfm.exists():
        gt = read_depth(pfm, DepthEncoding(FLOAT_MAP))
    elif pgm.exists():
        gt = read_depth(pgm, encoding_for(pgm))
    else:
        raise FileNotFoundError(f"{scene_dir}: no depth.pgm or depth.pfm")
    color_path = scene_dir / "color.ppm"
    if not color_path.exists():
        raise FileNotFoundError(f"{scene_dir}: no color.ppm")
    guide = read_color(color_path)
    if tuple(guide.shape) != tuple(gt.shape):
        raise DimensionError(f"{scene_dir.name}: depth {tuple(gt.shape)} vs colour {tuple(guide.shape)}")
    return gt, guide


def scene_seed(seed: int, scene: str, factor: int) -> int:
    return int(np.random.SeedSequence([seed, zlib.crc32(scene.encode()), factor]).generate_state(1)[0])


def run_method(method: str, low: DepthMap, guide: ColorImage, cfg: SolverConfig, factor: int,
               threads: int = 1):
    """``(output, iterations)`` for one of :data:`METHODS`."""
    if method == "bicubic":
        return bicubic_upsample(low, factor), 0
    if method == "mrf":
        out, rep = mrf_upsample(low, guide, cfg, threads=threads)
        return out, rep.iterations_run
    if method == "ours":
        out, _, rep = upsample(low, guide, cfg, threads=threads)
        return out, rep.iterations_run
    raise ValueError(f"unknown method {method!r}")


def evaluate_scene(name, gt, guide, factors, methods, cfg, spec, threads=1, timing=True):
    rows = []
    for factor in sorted(factors):
        gt_c = DepthMap(center_crop(gt.values, factor), max_mm=gt.max_mm)
        guide_c = ColorImage(center_crop(guide.values, factor))
        low = degrade(gt_c, DegradeSpec(factor, spec.noise_sigma, scene_seed(spec.rng_seed, name, factor)))
        for method in methods:
            t0 = time.perf_counter()
            out, iters = run_method(method, low, guide_c, cfg, factor, threads)
            secs = time.perf_counter() - t0
            rows.append(BenchResult(
                scene=name, factor=factor, method=method,
                rmse_255=round(rmse(out, gt_c), 6),
                rmse_mm=round(rmse(out, gt_c, "millimeters", gt.max_mm), 6) if gt.max_mm else None,
                iterations=iters,
                seconds=round(secs, 3) if timing else None,
            ))
    return rows


def run_benchmark(dataset_dir, factors=(2, 4, 8, 16), methods=METHODS, cfg: SolverConfig | None = None,
                  spec: DegradeSpec | None = None, *, threads: int = 1, timing: bool = True,
                  scenes: dict | None = None, report_path=None, table_path=None) -> list[BenchResult]:
    """Degrade, upsample and score every scene x factor x method.

    ``scenes`` may supply ``{name: (gt, guide)}`` directly instead of a
    dataset directory.  Per-scene failures become rows with ``error`` set and
    the run continues.
    """
    cfg = cfg or SolverConfig()
    spec = spec or DegradeSpec()
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    results: list[BenchResult] = []
    if scenes is None:
        root = Path(dataset_dir)
        if not root.is_dir():
            raise NotADirectoryError(f"{root}: not a readable directory")
        names = sorted(p.name for p in root.iterdir() if p.is_dir())
        if not names:
            log.warning("%s contains no scene directories", root)
        loaders = {n: (lambda n=n: load_scene(root / n)) for n in names}
    else:
        loaders = {n: (lambda v=v: v) for n, v in sorted(scenes.items())}
    for name, load in loaders.items():
        try:
            gt, guide = load()
            results.extend(evaluate_scene(name, gt, guide, factors, methods, cfg, spec, threads, timing))
        except Exception as exc:  # recorded per scene; the run goes on
            log.error("scene %s failed: %s", name, exc)
            results.append(BenchResult(scene=name, factor=0, method="", rmse_255=None, error=str(exc)))
    results.sort(key=lambda r: (r.scene, r.factor))
    if report_path is not None:
        write_report(results, report_path)
    if table_path is not None:
        Path(table_path).write_text(format_table(results))
    return results


def write_report(results, path) -> None:
    lines = [json.dumps(r.record(), sort_keys=True) for r in results]
    Path(path).write_text("".join(line + "\n" for line in lines))


def read_report(path) -> list[BenchResult]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(BenchResult(**json.loads(line)))
    return out


def format_table(results, value: str = "rmse_255") -> str:
    """Methods as rows, scene x factor as columns.

    ``value`` picks the column printed: ``rmse_255`` or ``rmse_mm``.
    """
    if value not in ("rmse_255", "rmse_mm"):
        raise ValueError(f"unknown value column {value!r}")
    ok = [r for r in results if r.error is None and getattr(r, value) is not None]
    scenes = sorted({r.scene for r in ok})
    factors = {s: sorted({r.factor for r in ok if r.scene == s}) for s in scenes}
    methods = []
    for r in ok:
        if r.method not in methods:
            methods.append(r.method)
    cell = {(r.scene, r.factor, r.method): r for r in ok}
    cols = [(s, f) for s in scenes for f in factors[s]]
    width = 8
    label_w = max([len("method")] + [len(m) for m in methods])
    head1 = " " * label_w + " |"
    for s in scenes:
        span = len(factors[s]) * (width + 1) - 1
        head1 += " " + s[:span].center(span) + " |"
    head2 = "method".ljust(label_w) + " |"
    for s in scenes:
        head2 += " " + " ".join(f"{f}x".rjust(width) for f in factors[s]) + " |"
    rule = "-" * len(head2)
    lines = [head1, head2, rule]
    for m in methods:
        line = m.ljust(label_w) + " |"
        for s in scenes:
            vals = []
            for f in factors[s]:
                r = cell.get((s, f, m))
                vals.append(f"{getattr(r, value):.2f}".rjust(width) if r else "-".rjust(width))
            line += " " + " ".join(vals) + " |"
        lines.append(line)
    failed = [r for r in results if r.error is not None]
    for r in failed:
        lines.append(f"! {r.scene}: {r.error}")
    return "\n".join(lines) + "\n"
