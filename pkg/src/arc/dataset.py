"""Dataset ingestion: the class-per-directory image corpus, the stratified
train/val/test split, the price catalog, and a content-addressed cache of
preprocessed images."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import BadImage, ConfigError, NoObject
from .preprocess import PipelineConfig, preprocess
from .raster import Raster, read_image

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}
SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class CatalogItem:
    item_id: int
    dir: str
    name: str
    unit_price: int  # minor currency units


@dataclass(frozen=True)
class Catalog:
    """Item ids, display names and unit prices; ids are dense 0..K-1."""

    currency: str
    items: tuple[CatalogItem, ...]

    def __post_init__(self):
        ids = [it.item_id for it in self.items]
        if sorted(ids) != list(range(len(self.items))):
            raise ConfigError("catalog item ids must be dense 0..K-1")
        dirs = [it.dir for it in self.items]
        if len(set(dirs)) != len(dirs):
            raise ConfigError("catalog directory names must be unique")
        if any(it.unit_price < 0 for it in self.items):
            raise ConfigError("catalog prices must be non-negative")

    def __len__(self) -> int:
        return len(self.items)

    def by_id(self, item_id: int) -> CatalogItem:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise KeyError(item_id)

    def to_dict(self) -> dict:
        return {
            "currency": self.currency,
            "items": [
                {"id": it.item_id, "dir": it.dir, "name": it.name, "unit_price": it.unit_price}
                for it in sorted(self.items, key=lambda i: i.item_id)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Catalog":
        items = tuple(
            CatalogItem(item_id=e["id"], dir=e["dir"], name=e["name"], unit_price=int(e["unit_price"]))
            for e in d["items"]
        )
        return cls(currency=d["currency"], items=items)

    @classmethod
    def load(cls, path) -> "Catalog":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"cannot load catalog {path}: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


@dataclass(frozen=True)
class IndexRecord:
    path: str
    item_id: int
    split: str | None = None


@dataclass(frozen=True)
class DatasetIndex:
    records: tuple[IndexRecord, ...]

    def by_split(self, split: str) -> list[IndexRecord]:
        if split not in SPLIT_NAMES:
            raise ConfigError(f"unknown split {split!r}")
        return [r for r in self.records if r.split == split]

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for r in self.records:
            counts[r.item_id] = counts.get(r.item_id, 0) + 1
        return counts


def _is_decodable(path: Path) -> bool:
    try:
        with Image.open(path) as im:
            im.verify()
        return True
    except (UnidentifiedImageError, OSError):
        return False


def scan(root_dir, catalog: Catalog) -> DatasetIndex:
    """Index all decodable images under one subdirectory per catalog entry.

    Missing class directories are fatal; undecodable files are skipped and
    directories not in the catalog are ignored, both with a warning.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise ConfigError(f"dataset root {root} is not a directory")
    known_dirs = {it.dir: it.item_id for it in catalog.items}
    for d in sorted(p.name for p in root.iterdir() if p.is_dir()):
        if d not in known_dirs:
            log.warning("ignoring directory %s: not in catalog", d)
    records: list[IndexRecord] = []
    for it in sorted(catalog.items, key=lambda i: i.item_id):
        class_dir = root / it.dir
        if not class_dir.is_dir():
            raise ConfigError(f"missing class directory {class_dir}")
        count = 0
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() not in IMAGE_SUFFIXES or not path.is_file():
                continue
            if not _is_decodable(path):
                log.warning("skipping undecodable file %s", path)
                continue
            records.append(IndexRecord(str(path), it.item_id))
            count += 1
        log.info("class %d (%s): %d images", it.item_id, it.dir, count)
        if count == 0:
            raise ConfigError(f"class directory {class_dir} has no decodable images")
    return DatasetIndex(tuple(records))


def stratified_split(index: DatasetIndex, fractions=(0.65, 0.25, 0.10), seed: int = 0) -> DatasetIndex:
    """Tag each record train/val/test, per class: shuffle, then take the
    first floor(f_train*n), the next floor(f_val*n), and the remainder."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError("fractions must sum to 1")
    rng = np.random.default_rng(seed)
    by_class: dict[int, list[IndexRecord]] = {}
    for rec in index.records:
        by_class.setdefault(rec.item_id, []).append(rec)
    tagged: list[IndexRecord] = []
    for item_id in sorted(by_class):
        recs = sorted(by_class[item_id], key=lambda r: r.path)
        n = len(recs)
        if n < 3:
            raise ConfigError(f"class {item_id} has only {n} images; need at least 3")
        order = rng.permutation(n)
        n_train = int(np.floor(fractions[0] * n))
        n_val = int(np.floor(fractions[1] * n))
        for pos, rec_idx in enumerate(order):
            if pos < n_train:
                split = "train"
            elif pos < n_train + n_val:
                split = "val"
            else:
                split = "test"
            tagged.append(replace(recs[rec_idx], split=split))
    return DatasetIndex(tuple(tagged))


def write_manifest(index: DatasetIndex, path) -> None:
    with open(path, "w") as fh:
        fh.write("path,item_id,split\n")
        for rec in index.records:
            fh.write(f"{rec.path},{rec.item_id},{rec.split or ''}\n")


def read_manifest(path) -> DatasetIndex:
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "path,item_id,split":
            raise ConfigError(f"unexpected manifest header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            p, item_id, split = line.rsplit(",", 2)
            records.append(IndexRecord(p, int(item_id), split or None))
    return DatasetIndex(tuple(records))


class PreprocessCache:
    """Cache of pipeline outputs keyed by file content and pipeline config.

    Semantically invisible: a hit is byte-identical to rerunning the pipeline.
    """

    def __init__(self, cache_dir):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def _key(self, data: bytes, cfg: PipelineConfig) -> Path:
        h = hashlib.sha256()
        h.update(cfg.content_hash().encode())
        h.update(data)
        return self.dir / f"{h.hexdigest()}.npy"

    def get_or_compute(self, path, cfg: PipelineConfig) -> Raster:
        with open(path, "rb") as fh:
            data = fh.read()
        key = self._key(data, cfg)
        if key.exists():
            return np.load(key)
        from .raster import decode_image

        out = preprocess(decode_image(data), cfg)
        tmp = key.with_name(key.name + ".tmp")
        with open(tmp, "wb") as fh:
            np.save(fh, out)
        os.replace(tmp, key)
        return out


def one_hot(item_id: int, num_classes: int) -> np.ndarray:
    if not 0 <= item_id < num_classes:
        raise ConfigError(f"item id {item_id} outside 0..{num_classes - 1}")
    y = np.zeros(num_classes, dtype=np.float32)
    y[item_id] = 1.0
    return y


def load_example(record: IndexRecord, cfg: PipelineConfig, num_classes: int, cache: PreprocessCache | None = None):
    """Decode, preprocess (or fetch from cache) and pair with a one-hot label."""
    if cache is not None:
        img = cache.get_or_compute(record.path, cfg)
    else:
        img = preprocess(read_image(record.path), cfg)
    return img, one_hot(record.item_id, num_classes)


def build_pool(index: DatasetIndex, split: str, catalog: Catalog, cfg: PipelineConfig, cache: PreprocessCache | None = None):
    """Materialize a split as (raster, one-hot) pairs.

    Records the pipeline rejects (no object, undecodable) are quarantined and
    reported rather than aborting the build.
    """
    pool = []
    quarantined: list[str] = []
    for rec in index.by_split(split):
        try:
            pool.append(load_example(rec, cfg, len(catalog), cache))
        except (NoObject, BadImage) as exc:
            log.warning("quarantined %s: %s", rec.path, exc)
            quarantined.append(rec.path)
    return pool, quarantined
