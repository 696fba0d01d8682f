"""Independent reference implementations used to pin expected values.

Everything here is deliberately written the slow, literal way (scalar loops,
set algebra, exhaustive search) and stays independent of the implementations
it checks.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np


def luma_scalar(r: int, g: int, b: int) -> int:
    y = 0.299 * float(r) + 0.587 * float(g) + 0.114 * float(b)
    return int(min(255, max(0, round(y))))


def rot90_ccw_scalar(img: np.ndarray) -> np.ndarray:
    """Explicit transpose-and-reverse index permutation for one 90 degree
    counterclockwise turn."""
    h, w = img.shape[:2]
    out = np.zeros((w, h) + img.shape[2:], dtype=img.dtype)
    for r in range(h):
        for c in range(w):
            out[w - 1 - c, r] = img[r, c]
    return out


def otsu_scalar(gray: np.ndarray) -> tuple[int, float]:
    """Exhaustive 0..255 search maximizing between-class variance.

    Returns (threshold, best variance); smallest threshold wins ties.
    """
    values = gray.ravel().tolist()
    total = len(values)
    best_t, best_sigma = -1, -1.0
    for t in range(256):
        lo = [v for v in values if v <= t]
        hi = [v for v in values if v > t]
        if not lo or not hi:
            continue
        w0 = len(lo) / total
        w1 = len(hi) / total
        mu0 = sum(lo) / len(lo)
        mu1 = sum(hi) / len(hi)
        sigma = w0 * w1 * (mu0 - mu1) ** 2
        if sigma > best_sigma + 1e-12:
            best_sigma = sigma
            best_t = t
    return best_t, best_sigma


def flood_fill_components(mask: np.ndarray) -> int:
    """8-connected component count by breadth-first flood fill."""
    h, w = mask.shape
    seen = [[False] * w for _ in range(h)]
    count = 0
    for r in range(h):
        for c in range(w):
            if not mask[r, c] or seen[r][c]:
                continue
            count += 1
            queue = deque([(r, c)])
            seen[r][c] = True
            while queue:
                cr, cc = queue.popleft()
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        nr, nc = cr + dr, cc + dc
                        if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and not seen[nr][nc]:
                            seen[nr][nc] = True
                            queue.append((nr, nc))
    return count


def component_border_pixels(mask: np.ndarray) -> set[tuple[int, int]]:
    """Foreground pixels with at least one background (or out-of-bounds)
    4- or 8-neighbor."""
    h, w = mask.shape
    border = set()
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    nr, nc = r + dr, c + dc
                    if not (0 <= nr < h and 0 <= nc < w) or not mask[nr, nc]:
                        border.add((r, c))
    return border


def dilate_set(mask: np.ndarray, size: int) -> np.ndarray:
    """Set-union dilation by a size x size rectangle (background padding)."""
    r = size // 2
    h, w = mask.shape
    out = np.zeros_like(mask, dtype=bool)
    fg = [(i, j) for i in range(h) for j in range(w) if mask[i, j]]
    for i, j in fg:
        for di in range(-r, r + 1):
            for dj in range(-r, r + 1):
                ni, nj = i + di, j + dj
                if 0 <= ni < h and 0 <= nj < w:
                    out[ni, nj] = True
    return out


def erode_set(mask: np.ndarray, size: int) -> np.ndarray:
    """Erosion by marking every pixel whose window contains an in-bounds
    background pixel as removed (out-of-bounds counts as foreground)."""
    r = size // 2
    h, w = mask.shape
    killed = np.zeros_like(mask, dtype=bool)
    bg = [(i, j) for i in range(h) for j in range(w) if not mask[i, j]]
    for i, j in bg:
        for di in range(-r, r + 1):
            for dj in range(-r, r + 1):
                ni, nj = i + di, j + dj
                if 0 <= ni < h and 0 <= nj < w:
                    killed[ni, nj] = True
    return mask & ~killed


def close_set(mask: np.ndarray, size: int) -> np.ndarray:
    return erode_set(dilate_set(mask, size), size)


def hysteresis_flood(mag: np.ndarray, low: float, high: float) -> np.ndarray:
    """Reference hysteresis: flood from strong pixels over weak ones."""
    h, w = mag.shape
    keep = np.zeros((h, w), dtype=bool)
    queue = deque((r, c) for r in range(h) for c in range(w) if mag[r, c] >= high)
    for r, c in queue:
        keep[r, c] = True
    while queue:
        r, c = queue.popleft()
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                nr, nc = r + dr, c + dc
                if 0 <= nr < h and 0 <= nc < w and not keep[nr, nc] and mag[nr, nc] >= low:
                    keep[nr, nc] = True
                    queue.append((nr, nc))
    return keep


def equalize_scalar(img: np.ndarray) -> np.ndarray:
    """Literal per-pixel histogram equalization on the luma channel.

    Mirrors the stated rule step by step: luma histogram, bins scaled to sum
    to 255, exclusive prefix integral as the lookup table, chroma preserved
    as per-channel offsets.
    """
    h, w, _ = img.shape
    luma = [[0] * w for _ in range(h)]
    counts = [0] * 256
    for r in range(h):
        for c in range(w):
            y = luma_scalar(int(img[r, c, 0]), int(img[r, c, 1]), int(img[r, c, 2]))
            luma[r][c] = y
            counts[y] += 1
    total = float(h * w)
    normalized = [(counts[i] * 255.0) / total for i in range(256)]
    integral = [0.0] * 256
    acc = 0.0
    for i in range(1, 256):
        acc += normalized[i - 1]
        integral[i] = acc
    lut = [int(round(integral[i])) for i in range(256)]
    out = np.zeros_like(img)
    for r in range(h):
        for c in range(w):
            y = luma[r][c]
            ny = lut[y]
            for ch in range(3):
                val = ny + int(img[r, c, ch]) - y
                out[r, c, ch] = min(255, max(0, val))
    return out


def min_rect_area_sweep(points: np.ndarray, step_deg: float = 0.02) -> float:
    """Dense angle sweep over [0, 90) for the minimum bounding-box area of a
    point cloud."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    xs, ys = pts[:, 1], pts[:, 0]
    best = math.inf
    ang = 0.0
    while ang < 90.0:
        t = math.radians(ang)
        u = xs * math.cos(t) + ys * math.sin(t)
        v = -xs * math.sin(t) + ys * math.cos(t)
        area = (u.max() - u.min()) * (v.max() - v.min())
        if area < best:
            best = area
        ang += step_deg
    return best


def parse_receipt(text: str) -> tuple[list[int], int]:
    """Parse item prices and the total back out of rendered receipt text,
    in minor units."""
    lines = text.splitlines()
    seps = [i for i, line in enumerate(lines) if set(line) == {"-"}]
    assert len(seps) >= 3, "expected three separator lines"
    items = []
    for line in lines[seps[0] + 1 : seps[1]]:
        price = line.rsplit(" ", 1)[1]
        units, cents = price.split(".")
        items.append(int(units) * 100 + int(cents))
    total_line = lines[seps[1] + 1]
    assert total_line.startswith("TOTAL")
    price = total_line.rsplit(" ", 1)[1]
    units, cents = price.split(".")
    return items, int(units) * 100 + int(cents)


def fd_gradient(loss_fn, param: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar loss over every element of
    ``param`` (mutated in place and restored)."""
    out = np.zeros_like(param)
    it = np.nditer(param, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = param[i]
        param[i] = old + h
        lp = loss_fn()
        param[i] = old - h
        lm = loss_fn()
        param[i] = old
        out[i] = (lp - lm) / (2.0 * h)
    return out


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-5) -> float:
    """Elementwise relative error with a small-denominator guard: gradients
    below the finite-difference resolution are compared absolutely."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((np.abs(analytic - numeric) / denom).max())
