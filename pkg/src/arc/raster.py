"""8-bit raster images and the geometric primitives behind the vision pipeline.

A raster is a plain numpy uint8 array: ``(H, W)`` for single-channel images
and ``(H, W, 3)`` for RGB (channel order red, green, blue). All operations
are pure: inputs are never mutated and outputs are freshly allocated.

Geometric resampling is done in float64 with elementwise arithmetic only (no
BLAS) so outputs are reproducible across platforms.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import BadImage, InvalidChannels, OutOfBounds

Raster = np.ndarray

#: Rec. 601 luma weights for 8-bit RGB.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class AxisRect:
    """Axis-aligned pixel rectangle; (x0, y0) is the inclusive top-left corner."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("rectangle must span at least one pixel")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError("rectangle origin must be non-negative")

    def fits_inside(self, height: int, width: int) -> bool:
        return self.x0 + self.width <= width and self.y0 + self.height <= height


def channel_count(img: Raster) -> int:
    if img.ndim == 2:
        return 1
    if img.ndim == 3 and img.shape[2] == 3:
        return 3
    raise InvalidChannels(f"unsupported raster shape {img.shape}")


def _check_uint8(img: Raster) -> None:
    if img.dtype != np.uint8:
        raise TypeError(f"raster must be uint8, got {img.dtype}")


def to_luma(img: Raster) -> Raster:
    """Collapse an RGB raster to its luma (Rec. 601 weighted brightness).

    Per pixel: ``round(0.299 R + 0.587 G + 0.114 B)``, clamped to [0, 255].
    Rounding is half-to-even.
    """
    _check_uint8(img)
    if channel_count(img) != 3:
        raise InvalidChannels("to_luma expects a 3-channel raster")
    w0, w1, w2 = LUMA_WEIGHTS
    f = img.astype(np.float64)
    y = w0 * f[:, :, 0] + w1 * f[:, :, 1] + w2 * f[:, :, 2]
    return np.clip(np.rint(y), 0, 255).astype(np.uint8)


def crop(img: Raster, r: AxisRect) -> Raster:
    """Copy out the pixels covered by ``r``."""
    _check_uint8(img)
    h, w = img.shape[:2]
    if not r.fits_inside(h, w):
        raise OutOfBounds(f"rect {r} exceeds raster {h}x{w}")
    return img[r.y0 : r.y0 + r.height, r.x0 : r.x0 + r.width].copy()


def rotate(img: Raster, angle: float, fill: int = 0) -> Raster:
    """Rotate a raster by ``angle`` degrees (positive is counterclockwise).

    The output canvas is the bounding box of the rotated input; pixels are
    sampled bilinearly about the image center and uncovered regions take
    ``fill``. Angles that are exact multiples of 90 take a lossless
    index-permutation path.
    """
    _check_uint8(img)
    if not math.isfinite(angle):
        raise ValueError("angle must be finite")
    quarter = angle / 90.0
    if abs(quarter - round(quarter)) < 1e-12:
        k = int(round(quarter)) % 4
        return np.rot90(img, k).copy()
    return _rotate_bilinear(img, angle, fill)


def _rotate_bilinear(img: Raster, angle: float, fill: int = 0) -> Raster:
    """General-angle rotation; exposed separately so tests can force this path."""
    h, w = img.shape[:2]
    rad = math.radians(angle)
    ca, sa = abs(math.cos(rad)), abs(math.sin(rad))
    out_w = max(1, int(math.ceil(w * ca + h * sa - 1e-9)))
    out_h = max(1, int(math.ceil(w * sa + h * ca - 1e-9)))

    rows = np.arange(out_h, dtype=np.float64)[:, None]
    cols = np.arange(out_w, dtype=np.float64)[None, :]
    dy = rows - (out_h - 1) / 2.0
    dx = cols - (out_w - 1) / 2.0
    cosr, sinr = math.cos(rad), math.sin(rad)
    # Inverse map: output pixel -> source location (screen-CCW content rotation).
    sx = cosr * dx - sinr * dy + (w - 1) / 2.0
    sy = sinr * dx + cosr * dy + (h - 1) / 2.0

    out = _bilinear_gather(img, sy, sx, fill=fill)
    return out


def _bilinear_gather(img: Raster, sy: np.ndarray, sx: np.ndarray, fill: int | None) -> Raster:
    """Sample ``img`` at float coordinates (sy, sx) with bilinear weights.

    ``fill`` of None clamps out-of-range samples to the border instead of
    filling (used by resize, where all samples are in range by construction).
    """
    h, w = img.shape[:2]
    squeeze = img.ndim == 2
    data = img[:, :, None] if squeeze else img

    if fill is not None:
        # sub-pixel tolerance so exact-boundary samples are not dropped
        eps = 1e-7
        valid = (sx >= -eps) & (sx <= w - 1 + eps) & (sy >= -eps) & (sy <= h - 1 + eps)
    else:
        valid = None
    sx = np.clip(sx, 0, w - 1)
    sy = np.clip(sy, 0, h - 1)

    x0 = np.clip(np.floor(sx), 0, max(w - 2, 0)).astype(np.intp)
    y0 = np.clip(np.floor(sy), 0, max(h - 2, 0)).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[:, :, None]
    fy = (sy - y0)[:, :, None]

    f = data.astype(np.float64)
    val = (
        f[y0, x0] * (1.0 - fy) * (1.0 - fx)
        + f[y0, x1] * (1.0 - fy) * fx
        + f[y1, x0] * fy * (1.0 - fx)
        + f[y1, x1] * fy * fx
    )
    out = np.clip(np.rint(val), 0, 255).astype(np.uint8)
    if valid is not None:
        out[~valid] = fill
    return out[:, :, 0] if squeeze else out


def pad_square(img: Raster) -> Raster:
    """Center the raster on a max(H, W) square canvas of zeros."""
    _check_uint8(img)
    h, w = img.shape[:2]
    side = max(h, w)
    shape = (side, side) if img.ndim == 2 else (side, side, img.shape[2])
    canvas = np.zeros(shape, dtype=np.uint8)
    top = (side - h) // 2
    left = (side - w) // 2
    canvas[top : top + h, left : left + w] = img
    return canvas


def resize_bilinear(img: Raster, out_h: int, out_w: int) -> Raster:
    """Bilinear resize with half-pixel-center sampling.

    Identity sizes reproduce the input byte for byte.
    """
    _check_uint8(img)
    h, w = img.shape[:2]
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be positive")
    if out_h == h and out_w == w:
        return img.copy()
    sy = (np.arange(out_h, dtype=np.float64)[:, None] + 0.5) * (h / out_h) - 0.5
    sx = (np.arange(out_w, dtype=np.float64)[None, :] + 0.5) * (w / out_w) - 0.5
    sy = np.broadcast_to(sy, (out_h, out_w))
    sx = np.broadcast_to(sx, (out_h, out_w))
    return _bilinear_gather(img, sy, sx, fill=None)


def pad_square_resize(img: Raster, side: int = 150) -> Raster:
    """Zero-pad to a centered square, then resize to ``side`` x ``side``."""
    if img.size == 0:
        raise ValueError("empty raster")
    return resize_bilinear(pad_square(img), side, side)


def decode_image(data: bytes) -> Raster:
    """Decode PNG/JPEG bytes into an RGB raster."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    except Exception as exc:
        raise BadImage(f"cannot decode image: {exc}") from exc


def read_image(path) -> Raster:
    """Read an image file from disk as an RGB raster."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise BadImage(f"cannot read {path}: {exc}") from exc
    return decode_image(data)


def encode_png(img: Raster) -> bytes:
    _check_uint8(img)
    mode = "L" if img.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(img, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def write_png(path, img: Raster) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def write_jpeg(path, img: Raster, quality: int = 92) -> None:
    _check_uint8(img)
    mode = "L" if img.ndim == 2 else "RGB"
    Image.fromarray(img, mode=mode).save(path, format="JPEG", quality=quality)
