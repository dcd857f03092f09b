"""Raster and config file I/O.

Depth rasters are binary PGM (``P5``, 8- or 16-bit, big-endian samples) or a
PFM-style float map (``Pf``, little-endian float32, rows stored bottom to
top).  The float map's scale field carries the metric range in millimetres
(``1`` when unknown).  Guidance images are binary PPM (``P6``, 8-bit).

A depth code of 0 is an ordinary depth value; no "missing" sentinel is
interpreted anywhere.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .imagecore import ColorImage, DepthMap, InputRangeError, denormalize_depth

GRAY8, GRAY16, FLOAT_MAP = "gray8", "gray16", "float_map"
_MAX_CODE = {GRAY8: 255, GRAY16: 65535}


class ImageFormatError(OSError):
    """Unreadable, malformed or out-of-range image file."""


@dataclass(frozen=True)
class DepthEncoding:
    kind: str
    max_mm: float | None = None

    def __post_init__(self):
        if self.kind not in (GRAY8, GRAY16, FLOAT_MAP):
            raise ValueError(f"unknown depth encoding {self.kind!r}")

    @property
    def max_code(self) -> int | None:
        return _MAX_CODE.get(self.kind)


# -- netpbm ---------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_header(data: bytes, n_fields: int, path) -> tuple[list[bytes], int]:
    pos = 0
    fields = []
    for _ in range(n_fields):
        m = _TOKEN.match(data, pos)
        if not m:
            raise ImageFormatError(f"{path}: truncated header")
        fields.append(m.group(1))
        pos = m.end()
    # exactly one whitespace byte separates header and raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError(f"{path}: malformed header")
    return fields, pos + 1


def _load_bytes(path) -> bytes:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"{path}: cannot read ({exc.strerror or exc})") from exc
    if not data:
        raise ImageFormatError(f"{path}: empty file")
    return data


def _dims(fields, path) -> tuple[int, int]:
    try:
        w, h = int(fields[0]), int(fields[1])
    except ValueError as exc:
        raise ImageFormatError(f"{path}: bad dimensions") from exc
    if w <= 0 or h <= 0:
        raise ImageFormatError(f"{path}: zero-sized image ({w}x{h})")
    return h, w


def read_pnm(path) -> tuple[np.ndarray, int]:
    """Read a binary PGM/PPM; returns ``(codes, maxval)``."""
    data = _load_bytes(path)
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"{path}: not a binary PGM/PPM (magic {magic!r})")
    fields, start = _read_header(data, 4, path)
    h, w = _dims(fields[1:3], path)
    maxval = int(fields[3])
    if not 0 < maxval < 65536:
        raise ImageFormatError(f"{path}: invalid maxval {maxval}")
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = h * w * channels
    raw = np.frombuffer(data, dtype=dtype, count=min(count, (len(data) - start) // dtype.itemsize),
                        offset=start)
    if raw.size != count:
        raise ImageFormatError(f"{path}: truncated raster ({raw.size} of {count} samples)")
    codes = raw.astype(np.int64).reshape((h, w, 3) if channels == 3 else (h, w))
    if codes.max() > maxval:
        raise ImageFormatError(f"{path}: sample exceeds maxval {maxval}")
    return codes, maxval


def write_pnm(path, codes: np.ndarray, maxval: int) -> None:
    codes = np.asarray(codes)
    if codes.ndim == 2:
        magic = b"P5"
    elif codes.ndim == 3 and codes.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot write array of shape {codes.shape} as PGM/PPM")
    h, w = codes.shape[:2]
    dtype = ">u2" if maxval > 255 else "u1"
    header = b"%s\n%d %d\n%d\n" % (magic, w, h, maxval)
    _write(path, header + codes.astype(dtype).tobytes())


def _write(path, payload: bytes) -> None:
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise ImageFormatError(f"{path}: cannot write ({exc.strerror or exc})") from exc


# -- float map ------------------------------------------------------------------

def read_pfm(path) -> tuple[np.ndarray, float]:
    """Read a single-channel little-endian float map; returns ``(values, |scale|)``."""
    data = _load_bytes(path)
    if data[:2] != b"Pf":
        raise ImageFormatError(f"{path}: not a single-channel float map")
    fields, start = _read_header(data, 4, path)
    h, w = _dims(fields[1:3], path)
    try:
        scale = float(fields[3])
    except ValueError as exc:
        raise ImageFormatError(f"{path}: bad scale field") from exc
    if scale >= 0 or not math.isfinite(scale):
        raise ImageFormatError(f"{path}: only little-endian float maps (negative scale) are supported")
    count = h * w
    if len(data) - start < 4 * count:
        raise ImageFormatError(f"{path}: truncated raster")
    vals = np.frombuffer(data, dtype="<f4", count=count, offset=start).reshape(h, w)
    return np.flipud(vals).astype(np.float64), -scale


def write_pfm(path, values: np.ndarray, scale: float = 1.0) -> None:
    values = np.asarray(values)
    h, w = values.shape
    header = b"Pf\n%d %d\n%s\n" % (w, h, repr(-abs(float(scale))).encode())
    _write(path, header + np.flipud(values).astype("<f4").tobytes())


# -- depth / colour -------------------------------------------------------------

def encoding_for(path, kind: str | None = None) -> DepthEncoding:
    """Pick an encoding from the file suffix (and bit depth for existing PGMs)."""
    if kind:
        return DepthEncoding(kind)
    if Path(path).suffix.lower() == ".pfm":
        return DepthEncoding(FLOAT_MAP)
    if Path(path).exists():
        _, maxval = read_pnm(path)
        return DepthEncoding(GRAY8 if maxval <= 255 else GRAY16)
    return DepthEncoding(GRAY8)


def read_depth(path, encoding: DepthEncoding) -> DepthMap:
    """Read and normalize a depth raster; the metric scale is kept on the map."""
    if encoding.kind == FLOAT_MAP:
        vals, scale = read_pfm(path)
        if not np.all(np.isfinite(vals)):
            raise ImageFormatError(f"{path}: float map contains NaN or Inf")
        if vals.min() < 0 or vals.max() > 1:
            raise ImageFormatError(f"{path}: float map values outside [0, 1]")
        max_mm = encoding.max_mm if encoding.max_mm is not None else (scale if scale != 1.0 else None)
        return DepthMap(vals, max_mm=max_mm)
    codes, maxval = read_pnm(path)
    if codes.ndim != 2:
        raise ImageFormatError(f"{path}: depth must be single-channel")
    max_code = encoding.max_code
    if (encoding.kind == GRAY8) != (maxval <= 255):
        raise ImageFormatError(f"{path}: maxval {maxval} does not match declared {encoding.kind}")
    return DepthMap(codes / max_code, max_mm=encoding.max_mm)


def write_depth(depth: DepthMap, path, encoding: DepthEncoding) -> None:
    """Write a depth map; integer encodings round half up to the nearest code."""
    if encoding.kind == FLOAT_MAP:
        scale = encoding.max_mm or depth.max_mm or 1.0
        write_pfm(path, depth.values, scale)
        return
    write_pnm(path, denormalize_depth(depth, encoding.max_code), encoding.max_code)


def read_color(path) -> ColorImage:
    codes, maxval = read_pnm(path)
    if codes.ndim != 3:
        raise ImageFormatError(f"{path}: guidance must be an RGB (P6) image")
    return ColorImage(codes / maxval)


def write_color(img: ColorImage, path) -> None:
    write_pnm(path, np.floor(img.values * 255 + 0.5), 255)


def write_bandwidth_visual(bw, path, lambda_min: float | None = None,
                           lambda_max: float | None = None) -> None:
    """Linear map ``[lambda_min, lambda_max] -> [0, 255]``; darker means smaller bandwidth."""
    lo = bw.lambda_min if lambda_min is None else lambda_min
    hi = bw.lambda_max if lambda_max is None else lambda_max
    t = np.clip((bw.values - lo) / (hi - lo), 0.0, 1.0)
    write_pnm(path, np.floor(t * 255 + 0.5), 255)


# -- config ---------------------------------------------------------------------

def _parse_number(text: str) -> float:
    # plain numbers or simple fractions such as 10/255
    if "/" in text:
        a, b = text.split("/", 1)
        return float(Fraction(a.strip()) / Fraction(b.strip()))
    return float(text)


def _parse_value(key: str, text: str, ftype):
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    if "bool" in str(ftype):
        if text.lower() in ("true", "yes", "1", "on"):
            return True
        if text.lower() in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if "int" in str(ftype):
        v = _parse_number(text)
        if v != int(v):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(v)
    return _parse_number(text)


class ConfigFileError(ValueError):
    pass


def load_config(path):
    """Read ``key = value`` lines (``#`` comments) into a validated config."""
    from .solver import ConfigError, SolverConfig

    types = {f.name: f.type for f in dataclasses.fields(SolverConfig)}
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigFileError(f"{path}: cannot read ({exc.strerror or exc})") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError(f"{path}:{lineno}: expected 'key = value'")
        key, _, text = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in types:
            raise ConfigFileError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, text, types[key])
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigFileError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    try:
        return SolverConfig(**values)
    except ConfigError as exc:
        raise ConfigFileError(f"{path}: {exc}") from exc


def save_config(cfg, path) -> None:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {'none' if v is None else repr(v)}")
    _write(path, ("\n".join(lines) + "\n").encode())
