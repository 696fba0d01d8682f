"""Synthetic colored-shape corpus: ten item classes rendered on a dark belt.

Frames mimic the capture geometry the pipeline expects: a dark matte belt
region surrounded by a brighter support structure (cropped away by the belt
rectangle), one bright object per frame at a random position, scale and
rotation.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .dataset import Catalog, CatalogItem
from .preprocess import PipelineConfig
from .raster import AxisRect, Raster, write_png

SHAPE_CLASSES = (
    "disk",
    "square",
    "triangle",
    "ring",
    "cross",
    "star",
    "diamond",
    "bars",
    "ell",
    "crescent",
)

_COLORS = {
    "disk": (220, 60, 50),
    "square": (70, 200, 80),
    "triangle": (70, 110, 230),
    "ring": (230, 210, 70),
    "cross": (220, 80, 210),
    "star": (80, 220, 220),
    "diamond": (235, 150, 60),
    "bars": (230, 230, 230),
    "ell": (150, 80, 220),
    "crescent": (160, 230, 120),
}

FRAME_HEIGHT = 240
FRAME_WIDTH = 320
BELT_MARGIN_X = 16
BELT_MARGIN_Y = 12


def default_pipeline_config(**overrides) -> PipelineConfig:
    """Pipeline config matching the synthetic frame geometry.

    Edge thresholds sit below the weakest class-vs-belt luma contrast (~79
    for the disk class).
    """
    kwargs = dict(
        belt_crop=AxisRect(
            BELT_MARGIN_X,
            BELT_MARGIN_Y,
            FRAME_WIDTH - 2 * BELT_MARGIN_X,
            FRAME_HEIGHT - 2 * BELT_MARGIN_Y,
        ),
        canny_low=20.0,
        canny_high=60.0,
    )
    kwargs.update(overrides)
    return PipelineConfig(**kwargs)


def shapes_catalog(num_classes: int = 10, currency: str = "USD") -> Catalog:
    if not 1 <= num_classes <= len(SHAPE_CLASSES):
        raise ValueError(f"num_classes must be 1..{len(SHAPE_CLASSES)}")
    items = tuple(
        CatalogItem(item_id=i, dir=SHAPE_CLASSES[i], name=f"shape {SHAPE_CLASSES[i]}", unit_price=125 + 110 * i)
        for i in range(num_classes)
    )
    return Catalog(currency=currency, items=items)


def _shape_mask(name: str, u: np.ndarray, v: np.ndarray, radius: float) -> np.ndarray:
    r2 = u * u + v * v
    r = np.sqrt(r2)
    if name == "disk":
        return r <= radius
    if name == "square":
        return np.maximum(np.abs(u), np.abs(v)) <= 0.8 * radius
    if name == "triangle":
        # equilateral triangle, one vertex up
        verts = [
            (radius * math.cos(a), radius * math.sin(a))
            for a in (math.radians(90), math.radians(210), math.radians(330))
        ]
        inside = np.ones_like(u, dtype=bool)
        for i in range(3):
            x0, y0 = verts[i]
            x1, y1 = verts[(i + 1) % 3]
            inside &= (x1 - x0) * (v - y0) - (y1 - y0) * (u - x0) >= 0
        return inside
    if name == "ring":
        return (r <= radius) & (r >= 0.55 * radius)
    if name == "cross":
        return ((np.abs(u) <= 0.3 * radius) & (np.abs(v) <= radius)) | (
            (np.abs(v) <= 0.3 * radius) & (np.abs(u) <= radius)
        )
    if name == "star":
        ang = np.arctan2(v, u)
        t = (ang * 5.0 / (2.0 * math.pi)) % 1.0
        zigzag = np.abs(2.0 * t - 1.0)
        return r <= radius * (0.45 + 0.55 * zigzag)
    if name == "diamond":
        return np.abs(u) + np.abs(v) <= radius
    if name == "bars":
        return (np.abs(u) <= radius) & (np.abs(np.abs(v) - 0.45 * radius) <= 0.2 * radius)
    if name == "ell":
        return ((u >= -radius) & (u <= -0.4 * radius) & (np.abs(v) <= radius)) | (
            (v >= 0.4 * radius) & (v <= radius) & (np.abs(u) <= radius)
        )
    if name == "crescent":
        return (r <= radius) & ((u - 0.45 * radius) ** 2 + v * v >= (0.75 * radius) ** 2)
    raise ValueError(f"unknown shape {name!r}")


def render_frame(class_id: int, rng: np.random.Generator, height: int = FRAME_HEIGHT, width: int = FRAME_WIDTH) -> Raster:
    """One synthetic belt frame containing a single shape of the given class."""
    name = SHAPE_CLASSES[class_id]
    frame = rng.normal(28.0, 6.0, size=(height, width, 3))

    # brighter support structure outside the belt area, with vertical seams
    border = np.zeros((height, width), dtype=bool)
    border[:BELT_MARGIN_Y] = True
    border[height - BELT_MARGIN_Y :] = True
    border[:, :BELT_MARGIN_X] = True
    border[:, width - BELT_MARGIN_X :] = True
    frame[border] += 70.0
    seam = (np.arange(width) // 8) % 2 == 0
    frame[:, seam & (np.arange(width) < BELT_MARGIN_X)] += 40.0
    frame[:, seam & (np.arange(width) >= width - BELT_MARGIN_X)] += 40.0

    cy = rng.uniform(0.38, 0.62) * height
    cx = rng.uniform(0.38, 0.62) * width
    radius = rng.uniform(32.0, 52.0)
    phi = rng.uniform(0.0, 2.0 * math.pi)

    rows = np.arange(height, dtype=np.float64)[:, None] - cy
    cols = np.arange(width, dtype=np.float64)[None, :] - cx
    u = math.cos(phi) * cols + math.sin(phi) * rows
    v = -math.sin(phi) * cols + math.cos(phi) * rows
    mask = _shape_mask(name, u, v, radius)

    color = np.array(_COLORS[name], dtype=np.float64)
    brightness = rng.uniform(0.85, 1.1)
    noise = rng.normal(0.0, 9.0, size=(height, width, 3))
    shaded = color[None, None, :] * brightness + noise
    frame = np.where(mask[:, :, None], shaded, frame)
    return np.clip(np.rint(frame), 0, 255).astype(np.uint8)


def make_corpus(root, images_per_class: int, seed: int = 0, num_classes: int = 10) -> Catalog:
    """Write a class-per-directory PNG corpus plus its catalog.json."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    catalog = shapes_catalog(num_classes)
    rng = np.random.default_rng(seed)
    for item in catalog.items:
        class_dir = root / item.dir
        class_dir.mkdir(exist_ok=True)
        for k in range(images_per_class):
            frame = render_frame(item.item_id, rng)
            write_png(class_dir / f"img_{k:04d}.png", frame)
    catalog.save(root / "catalog.json")
    return catalog
