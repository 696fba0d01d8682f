#!/usr/bin/env python3
"""End-to-end desk experiment: generate shapes, train, and report test accuracy."""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from arc import dataset
from arc.nn import network_from_checkpoint
from arc.synthetic import default_pipeline_config, make_corpus
from arc.training import TrainConfig, evaluate, train


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="working directory")
    parser.add_argument("--images-per-class", type=int, default=250)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--stop-at-val-acc", type=float, default=0.99)
    args = parser.parse_args()

    base = Path(args.out)
    root = base / "corpus"
    t0 = time.time()
    if not (root / "catalog.json").exists():
        make_corpus(root, args.images_per_class, seed=args.seed, num_classes=args.classes)
        print(f"corpus written in {time.time() - t0:.1f}s")
    pipeline = default_pipeline_config()
    (base / "pipeline.json").write_text(json.dumps(pipeline.to_dict(), indent=2) + "\n")

    cfg = TrainConfig(
        dataset_root=str(root),
        catalog_path=str(root / "catalog.json"),
        out_dir=str(base / "run"),
        cache_dir=str(base / "cache"),
        seed=args.seed,
        max_epochs=args.epochs,
        fractions=(0.65, 0.15, 0.20),
        pipeline=pipeline,
        stop_at_val_acc=args.stop_at_val_acc,
    )
    result = train(cfg)
    print(f"trained {len(result.history)} epochs in {time.time() - t0:.1f}s")

    catalog = dataset.Catalog.load(cfg.catalog_path)
    index = dataset.stratified_split(dataset.scan(root, catalog), cfg.fractions, cfg.seed)
    cache = dataset.PreprocessCache(cfg.cache_dir)
    test_pool, _ = dataset.build_pool(index, "test", catalog, pipeline, cache)
    network, _ = network_from_checkpoint(result.best_checkpoint_path)
    res = evaluate(network, test_pool)
    print(f"test accuracy: {res.accuracy:.4f} over {len(test_pool)} examples")
    print(f"checkpoint: {result.best_checkpoint_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
