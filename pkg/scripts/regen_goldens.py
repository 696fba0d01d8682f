#!/usr/bin/env python3
"""Regenerate the committed sample frames and their per-stage golden hashes.

Run only when the pipeline semantics intentionally change; the test suite
compares against the committed output of this script.
"""

import hashlib
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from arc.preprocess import preprocess_stages
from arc.raster import write_png
from arc.synthetic import SHAPE_CLASSES, default_pipeline_config, render_frame

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"
FRAME_SEEDS = [(0, 101), (2, 202), (4, 303), (6, 404), (8, 505), (9, 606)]


def main() -> int:
    frames_dir = DATA_DIR / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    cfg = default_pipeline_config()
    golden = {"pipeline": cfg.to_dict(), "frames": {}}
    for class_id, seed in FRAME_SEEDS:
        name = f"{SHAPE_CLASSES[class_id]}_{seed}"
        frame = render_frame(class_id, np.random.default_rng(seed))
        write_png(frames_dir / f"{name}.png", frame)
        stage_hashes = {}
        for stage, img in preprocess_stages(frame, cfg):
            stage_hashes[stage] = {
                "sha256": hashlib.sha256(img.tobytes()).hexdigest(),
                "shape": list(img.shape),
            }
        golden["frames"][name] = stage_hashes
    out = DATA_DIR / "golden_stages.json"
    out.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(FRAME_SEEDS)} frames and {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
