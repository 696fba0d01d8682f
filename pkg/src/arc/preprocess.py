"""Frame preprocessing: from a raw belt frame to the 150x150 network input.

The pipeline runs six steps in order: belt crop, orientation correction,
object segmentation (edges -> closing -> contours -> best bounding rect),
sharpening, luma histogram equalization, and square pad + resize.

Masks are boolean (H, W) arrays; contours are (N, 2) int arrays of
(row, col) border pixels in tracing order.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateImage, InvalidChannels, NoForeground, NoObject
from .raster import AxisRect, Raster, channel_count, crop, pad_square_resize, rotate, to_luma, write_png

BinaryMask = np.ndarray
Contour = np.ndarray


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the preprocessing pipeline; immutable once constructed."""

    belt_crop: AxisRect | None = None
    canny_low: float = 50.0
    canny_high: float = 150.0
    close_kernel: int = 7
    sharpen_gain: float = 1.0
    target_side: int = 150
    rotation_correction: bool = True

    def __post_init__(self) -> None:
        if not self.canny_low < self.canny_high:
            raise ValueError("canny_low must be below canny_high")
        if self.target_side < 1:
            raise ValueError("target_side must be positive")
        if self.close_kernel < 1 or self.close_kernel % 2 == 0:
            raise ValueError("close_kernel must be odd and positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.belt_crop is not None:
            d["belt_crop"] = [self.belt_crop.x0, self.belt_crop.y0, self.belt_crop.width, self.belt_crop.height]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if d.get("belt_crop") is not None:
            x0, y0, w, h = d["belt_crop"]
            d["belt_crop"] = AxisRect(x0, y0, w, h)
        return cls(**d)

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class RotatedRect:
    """Rotated rectangle: center (row, col), side lengths, and the angle in
    degrees of the len_a side measured from the column axis, folded to [0, 90)."""

    center: tuple[float, float]
    size: tuple[float, float]
    angle: float

    @property
    def diagonal(self) -> float:
        return math.hypot(self.size[0], self.size[1])

    def corners(self) -> np.ndarray:
        """The four corners as a (4, 2) float array of (row, col)."""
        rad = math.radians(self.angle)
        ux, uy = math.cos(rad), math.sin(rad)
        nx, ny = -uy, ux
        ha, hb = self.size[0] / 2.0, self.size[1] / 2.0
        cy, cx = self.center
        pts = []
        for sa, sb in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
            x = cx + sa * ha * ux + sb * hb * nx
            y = cy + sa * ha * uy + sb * hb * ny
            pts.append((y, x))
        return np.array(pts, dtype=np.float64)


@dataclass(frozen=True)
class Histogram:
    """256-bin luma histogram with the normalized and integral views used as
    the equalization lookup table: bins scaled to sum to 255, integral is the
    exclusive prefix sum of the scaled bins."""

    counts: np.ndarray
    normalized: np.ndarray
    integral: np.ndarray


# ---------------------------------------------------------------------------
# Binarization and orientation
# ---------------------------------------------------------------------------


def otsu_threshold(gray: Raster) -> int:
    """Threshold maximizing between-class variance (smallest tie wins)."""
    if channel_count(gray) != 1:
        raise InvalidChannels("expected a single-channel raster")
    counts = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    total = counts.sum()
    if counts.max() == total:
        raise DegenerateImage("zero-variance image has no threshold")
    p = counts / total
    omega = np.cumsum(p)
    levels = np.arange(256, dtype=np.float64)
    cum_mu = np.cumsum(p * levels)
    mu_t = cum_mu[-1]
    valid = (omega > 0) & (omega < 1)
    sigma = np.full(256, -1.0)
    om = omega[valid]
    sigma[valid] = (mu_t * om - cum_mu[valid]) ** 2 / (om * (1.0 - om))
    return int(np.argmax(sigma))


def foreground_mask(gray: Raster) -> BinaryMask:
    """Otsu-binarize a grayscale raster; foreground is strictly above threshold."""
    return gray > otsu_threshold(gray)


def _row_extremes(points: np.ndarray) -> np.ndarray:
    """Reduce (x, y) points to the min/max x per distinct y.

    The convex hull of the reduced set equals the hull of the full set, which
    keeps the hull scan cheap for filled regions.
    """
    pts = np.asarray(points, dtype=np.float64)
    ys, inverse = np.unique(pts[:, 1], return_inverse=True)
    min_x = np.full(len(ys), np.inf)
    max_x = np.full(len(ys), -np.inf)
    np.minimum.at(min_x, inverse, pts[:, 0])
    np.maximum.at(max_x, inverse, pts[:, 0])
    left = np.stack([min_x, ys], axis=1)
    right = np.stack([max_x, ys], axis=1)
    return np.concatenate([left, right])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of (x, y) float points, returned in order."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) > 64:
        pts = _row_extremes(pts)
    pts = np.unique(pts, axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append((p[0], p[1]))
    upper: list[tuple[float, float]] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append((p[0], p[1]))
    return np.array(lower[:-1] + upper[:-1], dtype=np.float64)


def _hull_row_span(hull: np.ndarray, y: float) -> tuple[float, float] | None:
    """Intersect a convex polygon with the horizontal line at y."""
    xs: list[float] = []
    n = len(hull)
    for i in range(n):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % n]
        if y0 == y1:
            if y0 == y:
                xs.extend((x0, x1))
            continue
        lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
        if lo <= y <= hi:
            t = (y - y0) / (y1 - y0)
            xs.append(x0 + t * (x1 - x0))
    if not xs:
        return None
    return min(xs), max(xs)


def _filled_hull_moments(hull: np.ndarray) -> tuple[float, float, float, float]:
    """Central second moments (mu20, mu02, mu11) and pixel count of the
    scanline-filled hull polygon (vertices are pixel centers, x=col, y=row)."""
    ys = hull[:, 1]
    y_lo, y_hi = int(math.ceil(ys.min() - 1e-9)), int(math.floor(ys.max() + 1e-9))
    n = sx = sy = sxx = syy = sxy = 0.0
    for y in range(y_lo, y_hi + 1):
        span = _hull_row_span(hull, float(y))
        if span is None:
            continue
        a = math.ceil(span[0] - 1e-9)
        b = math.floor(span[1] + 1e-9)
        if b < a:
            continue
        cnt = b - a + 1
        row_sx = (a + b) * cnt / 2.0
        row_sxx = (b * (b + 1) * (2 * b + 1) - (a - 1) * a * (2 * a - 1)) / 6.0
        n += cnt
        sx += row_sx
        sxx += row_sxx
        sy += y * cnt
        syy += y * y * cnt
        sxy += y * row_sx
    if n == 0:
        return 0.0, 0.0, 0.0, 0.0
    cx, cy = sx / n, sy / n
    mu20 = sxx - n * cx * cx
    mu02 = syy - n * cy * cy
    mu11 = sxy - n * cx * cy
    return mu20, mu02, mu11, n


def orientation_angle(mask: BinaryMask) -> float:
    """Principal-axis angle of the foreground's convex hull, in degrees.

    Positive angles mean the content is rotated counterclockwise on screen;
    rotating the image by the negated angle makes the object axis-aligned.
    Near-isotropic shapes report 0.
    """
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise NoForeground("mask has no foreground pixels")
    pts = np.stack([xs, ys], axis=1).astype(np.float64)
    hull = convex_hull(pts)
    if len(hull) <= 2:
        cx, cy = pts[:, 0].mean(), pts[:, 1].mean()
        mu20 = float(((pts[:, 0] - cx) ** 2).sum())
        mu02 = float(((pts[:, 1] - cy) ** 2).sum())
        mu11 = float(((pts[:, 0] - cx) * (pts[:, 1] - cy)).sum())
        area = float(len(pts))
    else:
        mu20, mu02, mu11, area = _filled_hull_moments(hull)
    tol = 1e-9 * area * area
    if abs(mu20 - mu02) < tol and abs(mu11) < tol:
        return 0.0
    theta = 0.5 * math.atan2(2.0 * mu11, mu20 - mu02)
    deg = -math.degrees(theta)  # flip: rows grow downward
    while deg <= -90.0:
        deg += 180.0
    while deg > 90.0:
        deg -= 180.0
    return deg


# ---------------------------------------------------------------------------
# Edge detection
# ---------------------------------------------------------------------------


def sobel_gradients(gray: Raster) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel responses (gx, gy) as float64; border pixels are zero."""
    p = gray.astype(np.float64)
    h, w = p.shape
    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    if h < 3 or w < 3:
        return gx, gy
    a = p[:-2, :-2]
    b = p[:-2, 1:-1]
    c = p[:-2, 2:]
    d = p[1:-1, :-2]
    e = p[1:-1, 2:]
    f = p[2:, :-2]
    g = p[2:, 1:-1]
    i = p[2:, 2:]
    gx[1:-1, 1:-1] = (c + 2.0 * e + i) - (a + 2.0 * d + f)
    gy[1:-1, 1:-1] = (f + 2.0 * g + i) - (a + 2.0 * b + c)
    return gx, gy


def gradient_magnitude(gray: Raster) -> np.ndarray:
    """Sobel magnitude scaled to the 8-bit range (a full step maps to its height)."""
    gx, gy = sobel_gradients(gray)
    return np.hypot(gx, gy) / 4.0


def _nms(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> BinaryMask:
    """Thin the magnitude ridge along the quantized gradient direction.

    Ties along the gradient keep the pixel on the smaller-index side, so a
    perfect step edge yields a one-pixel line.
    """
    h, w = mag.shape
    keep = np.zeros((h, w), dtype=bool)
    if h == 0 or w == 0:
        return keep
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = mag

    def nb(dr: int, dc: int) -> np.ndarray:
        return padded[1 + dr : h + 1 + dr, 1 + dc : w + 1 + dc]

    bins = (
        ((ang < 22.5) | (ang >= 157.5), (0, -1), (0, 1)),
        ((ang >= 22.5) & (ang < 67.5), (-1, -1), (1, 1)),
        ((ang >= 67.5) & (ang < 112.5), (-1, 0), (1, 0)),
        ((ang >= 112.5) & (ang < 157.5), (-1, 1), (1, -1)),
    )
    for sel, minus, plus in bins:
        keep |= sel & (mag > nb(*minus)) & (mag >= nb(*plus))
    keep &= mag > 0
    return keep


def _dilate3(mask: BinaryMask) -> BinaryMask:
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    out = np.zeros((h, w), dtype=bool)
    for dr in (0, 1, 2):
        for dc in (0, 1, 2):
            out |= padded[dr : dr + h, dc : dc + w]
    return out


def hysteresis(mag: np.ndarray, candidates: BinaryMask, low: float, high: float) -> BinaryMask:
    """Keep candidates at or above ``high`` plus any at or above ``low`` that
    are 8-connected to a kept pixel."""
    strong = candidates & (mag >= high)
    weak = candidates & (mag >= low)
    result = strong
    while True:
        grown = _dilate3(result) & weak
        if np.array_equal(grown, result):
            return result
        result = grown


def canny(gray: Raster, low: float, high: float) -> BinaryMask:
    """Sobel gradients, non-maximal suppression, hysteresis thresholding."""
    if not low < high:
        raise ValueError("low threshold must be below high")
    if channel_count(gray) != 1:
        raise InvalidChannels("canny expects a single-channel raster")
    gx, gy = sobel_gradients(gray)
    mag = np.hypot(gx, gy) / 4.0
    keep = _nms(mag, gx, gy)
    return hysteresis(mag, keep, low, high)


# ---------------------------------------------------------------------------
# Morphology
# ---------------------------------------------------------------------------


def dilate(mask: BinaryMask, size: int = 7) -> BinaryMask:
    """Dilation by a size x size rectangle; out-of-bounds counts as background."""
    r = size // 2
    h, w = mask.shape
    rows = np.zeros((h + 2 * r, w), dtype=bool)
    rows[r : r + h] = mask
    tmp = np.zeros((h, w), dtype=bool)
    for k in range(size):
        tmp |= rows[k : k + h]
    cols = np.zeros((h, w + 2 * r), dtype=bool)
    cols[:, r : r + w] = tmp
    out = np.zeros((h, w), dtype=bool)
    for k in range(size):
        out |= cols[:, k : k + w]
    return out


def erode(mask: BinaryMask, size: int = 7) -> BinaryMask:
    """Erosion by a size x size rectangle; out-of-bounds counts as foreground."""
    r = size // 2
    h, w = mask.shape
    rows = np.ones((h + 2 * r, w), dtype=bool)
    rows[r : r + h] = mask
    tmp = np.ones((h, w), dtype=bool)
    for k in range(size):
        tmp &= rows[k : k + h]
    cols = np.ones((h, w + 2 * r), dtype=bool)
    cols[:, r : r + w] = tmp
    out = np.ones((h, w), dtype=bool)
    for k in range(size):
        out &= cols[:, k : k + w]
    return out


def morph_close(mask: BinaryMask, size: int = 7) -> BinaryMask:
    """Border-neutral closing: dilate then erode with the same rectangle."""
    return erode(dilate(mask, size), size)


# ---------------------------------------------------------------------------
# Contours
# ---------------------------------------------------------------------------


def _uf_find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def label_components(mask: BinaryMask) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """8-connected component labels via run merging.

    Returns the int label image (0 = background, labels start at 1 in raster
    order of each component's first pixel) and the first pixel per label.
    """
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    parent: list[int] = []
    all_runs: list[tuple[int, int, int, int]] = []
    prev: list[tuple[int, int, int]] = []
    for r in range(h):
        row = mask[r]
        if not row.any():
            prev = []
            continue
        padded = np.zeros(w + 2, dtype=np.int8)
        padded[1:-1] = row
        d = np.diff(padded)
        starts = np.flatnonzero(d == 1)
        ends = np.flatnonzero(d == -1) - 1
        cur: list[tuple[int, int, int]] = []
        pi = 0
        for a, b in zip(starts.tolist(), ends.tolist()):
            rid = len(parent)
            parent.append(rid)
            all_runs.append((r, a, b, rid))
            while pi < len(prev) and prev[pi][1] < a - 1:
                pi += 1
            j = pi
            while j < len(prev) and prev[j][0] <= b + 1:
                ra = _uf_find(parent, rid)
                rb = _uf_find(parent, prev[j][2])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
                j += 1
            cur.append((a, b, rid))
        prev = cur
    root_to_label: dict[int, int] = {}
    starts_out: list[tuple[int, int]] = []
    for r, a, b, rid in all_runs:
        root = _uf_find(parent, rid)
        lab = root_to_label.get(root)
        if lab is None:
            lab = len(starts_out) + 1
            root_to_label[root] = lab
            starts_out.append((r, a))
        labels[r, a : b + 1] = lab
    return labels, starts_out


_TRACE_DIRS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_DIR_INDEX = {d: i for i, d in enumerate(_TRACE_DIRS)}


def _trace_outer_border(labels: np.ndarray, lab: int, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Walk the outer border of one component clockwise from its first pixel."""
    h, w = labels.shape

    def scan(p: tuple[int, int], b: tuple[int, int]):
        i = _DIR_INDEX[(b[0] - p[0], b[1] - p[1])]
        for k in range(1, 9):
            dr, dc = _TRACE_DIRS[(i + k) % 8]
            qr, qc = p[0] + dr, p[1] + dc
            if 0 <= qr < h and 0 <= qc < w and labels[qr, qc] == lab:
                pr_dr, pr_dc = _TRACE_DIRS[(i + k - 1) % 8]
                return (qr, qc), (p[0] + pr_dr, p[1] + pr_dc)
        return None

    b0 = (start[0], start[1] - 1)
    if scan(start, b0) is None:
        return [start]
    seq: list[tuple[int, int]] = []
    seen: dict[tuple, int] = {}
    state = (start, b0)
    while state not in seen:
        seen[state] = len(seq)
        p, b = state
        seq.append(p)
        state = scan(p, b)
    return seq[seen[state] :]


def find_contours(mask: BinaryMask) -> list[Contour]:
    """One closed outer-border contour per 8-connected foreground component.

    Contours come out in raster order of each component's first pixel;
    holes are not reported.
    """
    labels, starts = label_components(mask)
    contours = []
    for lab, start in enumerate(starts, start=1):
        pts = _trace_outer_border(labels, lab, start)
        contours.append(np.array(pts, dtype=np.int32))
    return contours


# ---------------------------------------------------------------------------
# Bounding rectangles
# ---------------------------------------------------------------------------


def min_area_rect(contour: Contour) -> RotatedRect:
    """Minimum-area rotated rectangle enclosing the contour's pixels.

    The minimum is found over hull-edge-aligned rectangles of the pixel
    centers (rotating-calipers objective); each reported side is then one
    pixel wider than the center extent so an axis-aligned 10x10 block reports
    a 10x10 rectangle. One or two points degrade to a zero-width rect.
    """
    pts = np.asarray(contour, dtype=np.float64).reshape(-1, 2)
    uniq = np.unique(pts, axis=0)
    if len(uniq) == 0:
        raise ValueError("contour must contain at least one point")
    if len(uniq) == 1:
        r, c = uniq[0]
        return RotatedRect((float(r), float(c)), (0.0, 0.0), 0.0)
    if len(uniq) == 2:
        (r0, c0), (r1, c1) = uniq
        length = math.hypot(r1 - r0, c1 - c0)
        ang = math.degrees(math.atan2(r1 - r0, c1 - c0)) % 180.0
        size = (length, 0.0)
        if ang >= 90.0:
            ang -= 90.0
            size = (0.0, length)
        return RotatedRect(((r0 + r1) / 2.0, (c0 + c1) / 2.0), size, ang)

    hull = convex_hull(uniq[:, ::-1])  # (x=col, y=row)
    xs, ys = hull[:, 0], hull[:, 1]
    ex = np.roll(xs, -1) - xs
    ey = np.roll(ys, -1) - ys
    theta = np.arctan2(ey, ex)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    pu = xs[:, None] * cos_t[None, :] + ys[:, None] * sin_t[None, :]
    pn = -xs[:, None] * sin_t[None, :] + ys[:, None] * cos_t[None, :]
    wu = pu.max(axis=0) - pu.min(axis=0)
    wn = pn.max(axis=0) - pn.min(axis=0)
    best = int(np.argmin(wu * wn))
    cu = (pu[:, best].max() + pu[:, best].min()) / 2.0
    cn = (pn[:, best].max() + pn[:, best].min()) / 2.0
    cx = cu * cos_t[best] - cn * sin_t[best]
    cy = cu * sin_t[best] + cn * cos_t[best]
    ang = math.degrees(theta[best]) % 180.0
    size = (float(wu[best]) + 1.0, float(wn[best]) + 1.0)
    if ang >= 90.0:
        ang -= 90.0
        size = (size[1], size[0])
    return RotatedRect((float(cy), float(cx)), size, ang)


def select_main_object(rects: list[RotatedRect]) -> RotatedRect:
    """The rectangle with the longest diagonal; earliest index wins ties."""
    if not rects:
        raise NoObject("no candidate rectangles")
    best = rects[0]
    for r in rects[1:]:
        if r.diagonal > best.diagonal:
            best = r
    return best


def _rect_axis_bbox(rect: RotatedRect, height: int, width: int) -> AxisRect:
    pts = rect.corners()
    r0 = max(0, int(math.floor(pts[:, 0].min())))
    c0 = max(0, int(math.floor(pts[:, 1].min())))
    r1 = min(height - 1, int(math.ceil(pts[:, 0].max())))
    c1 = min(width - 1, int(math.ceil(pts[:, 1].max())))
    r1, c1 = max(r1, r0), max(c1, c0)
    return AxisRect(c0, r0, c1 - c0 + 1, r1 - r0 + 1)


# ---------------------------------------------------------------------------
# Enhancement
# ---------------------------------------------------------------------------


def sobel_sharpen(img: Raster, gain: float = 1.0) -> Raster:
    """Add the luma Sobel magnitude onto every channel, clamped to [0, 255]."""
    if channel_count(img) != 3:
        raise InvalidChannels("sobel_sharpen expects a 3-channel raster")
    if gain == 0.0:
        return img.copy()
    mag = gradient_magnitude(to_luma(img))
    boosted = img.astype(np.float64) + gain * mag[:, :, None]
    return np.clip(np.rint(boosted), 0, 255).astype(np.uint8)


def luma_histogram(luma: Raster) -> Histogram:
    """Histogram of a luma raster, scaled so the bins sum to 255, with the
    exclusive prefix integral used as the equalization lookup table."""
    counts = np.bincount(luma.ravel(), minlength=256).astype(np.int64)
    total = float(luma.size)
    normalized = counts.astype(np.float64) * 255.0 / total
    integral = np.concatenate(([0.0], np.cumsum(normalized)[:-1]))
    return Histogram(counts=counts, normalized=normalized, integral=integral)


def equalize_hist_luma(img: Raster) -> Raster:
    """Histogram-equalize the luma channel, preserving per-pixel chroma offsets.

    New luma is ``round(integral[old luma])`` with the exclusive prefix
    integral, so a constant image maps to zero.
    """
    if channel_count(img) != 3:
        raise InvalidChannels("equalize_hist_luma expects a 3-channel raster")
    y = to_luma(img)
    hist = luma_histogram(y)
    lut = np.rint(hist.integral).astype(np.int32)
    new_y = lut[y]
    delta = img.astype(np.int32) - y[:, :, None].astype(np.int32)
    return np.clip(new_y[:, :, None] + delta, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# The pipeline
# ---------------------------------------------------------------------------

STAGE_NAMES = ("01_crop", "02_rotate", "03_segment", "04_sharpen", "05_equalize", "06_resize")


def preprocess_stages(frame: Raster, cfg: PipelineConfig) -> list[tuple[str, Raster]]:
    """Run the full pipeline, returning every stage output in order."""
    if channel_count(frame) != 3:
        raise InvalidChannels("pipeline expects a 3-channel frame")
    img = crop(frame, cfg.belt_crop) if cfg.belt_crop is not None else frame.copy()
    stages = [("01_crop", img)]

    if cfg.rotation_correction:
        try:
            mask = foreground_mask(to_luma(img))
            theta = orientation_angle(mask)
            if theta != 0.0:
                img = rotate(img, -theta)
        except (DegenerateImage, NoForeground):
            pass  # flat crop: the correction stage is bypassable
    stages.append(("02_rotate", img))

    edges = canny(to_luma(img), cfg.canny_low, cfg.canny_high)
    closed = morph_close(edges, cfg.close_kernel)
    contours = find_contours(closed)
    if not contours:
        raise NoObject("no object outline found in frame")
    rects = [min_area_rect(c) for c in contours]
    best = select_main_object(rects)
    img = crop(img, _rect_axis_bbox(best, img.shape[0], img.shape[1]))
    stages.append(("03_segment", img))

    img = sobel_sharpen(img, cfg.sharpen_gain)
    stages.append(("04_sharpen", img))

    img = equalize_hist_luma(img)
    stages.append(("05_equalize", img))

    img = pad_square_resize(img, cfg.target_side)
    stages.append(("06_resize", img))
    return stages


def preprocess(frame: Raster, cfg: PipelineConfig) -> Raster:
    """Full pipeline output: a target_side x target_side x 3 raster."""
    return preprocess_stages(frame, cfg)[-1][1]


def dump_stages(frame: Raster, cfg: PipelineConfig, out_dir) -> list[str]:
    """Write each stage output as ``<out_dir>/<stage>.png``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, img in preprocess_stages(frame, cfg):
        path = os.path.join(str(out_dir), f"{name}.png")
        write_png(path, img)
        paths.append(path)
    return paths
