#!/usr/bin/env python3
"""Generate the synthetic colored-shape corpus used for desk-scale runs."""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from arc.synthetic import default_pipeline_config, make_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="corpus root directory")
    parser.add_argument("--images-per-class", type=int, default=250)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    root = Path(args.out)
    catalog = make_corpus(root, args.images_per_class, seed=args.seed, num_classes=args.classes)
    pipeline_path = root.parent / "pipeline.json" if root.parent != root else root / "pipeline.json"
    pipeline_path.write_text(json.dumps(default_pipeline_config().to_dict(), indent=2) + "\n")
    print(f"wrote {args.classes * args.images_per_class} images under {root}")
    print(f"catalog: {root / 'catalog.json'}")
    print(f"pipeline config: {pipeline_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
