"""Command line entry points: preprocess, split, train, eval, infer, serve.

Exit codes: 0 success, 1 operational error, 2 usage error. Diagnostics and
the echoed resolved config go to stderr; machine-readable output is JSON on
stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset as dataset_mod
from .errors import ArcError
from .nn import network_from_checkpoint
from .preprocess import PipelineConfig, dump_stages, preprocess
from .raster import AxisRect, read_image, write_png
from .training import TrainConfig, evaluate, train

log = logging.getLogger("arc")


def _echo_config(verb: str, config: dict) -> None:
    print(f"{verb} config: {json.dumps(config, sort_keys=True)}", file=sys.stderr)


def _parse_bool(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


def _load_pipeline(path: str | None, args=None) -> PipelineConfig:
    if path:
        with open(path) as fh:
            cfg = PipelineConfig.from_dict(json.load(fh))
    else:
        cfg = PipelineConfig()
    if args is None:
        return cfg
    kwargs = _as_kwargs(cfg)
    if getattr(args, "belt", None):
        x0, y0, w, h = args.belt
        kwargs["belt_crop"] = AxisRect(x0, y0, w, h)
    if getattr(args, "no_rotation_correction", False):
        kwargs["rotation_correction"] = False
    return PipelineConfig(**kwargs)


def _as_kwargs(cfg: PipelineConfig) -> dict:
    return {
        "belt_crop": cfg.belt_crop,
        "canny_low": cfg.canny_low,
        "canny_high": cfg.canny_high,
        "close_kernel": cfg.close_kernel,
        "sharpen_gain": cfg.sharpen_gain,
        "target_side": cfg.target_side,
        "rotation_correction": cfg.rotation_correction,
    }


def parse_kv_file(path) -> dict[str, str]:
    """key = value lines; '#' starts a comment."""
    pairs: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ArcError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            pairs[key.strip()] = value.strip()
    return pairs


def train_config_from_pairs(pairs: dict[str, str]) -> TrainConfig:
    pipeline_pairs = {k[len("pipeline.") :]: v for k, v in pairs.items() if k.startswith("pipeline.")}
    pdict: dict = {}
    if "belt_crop" in pipeline_pairs:
        pdict["belt_crop"] = [int(x) for x in pipeline_pairs["belt_crop"].split(",")]
    for key, cast in (
        ("canny_low", float),
        ("canny_high", float),
        ("close_kernel", int),
        ("sharpen_gain", float),
        ("target_side", int),
    ):
        if key in pipeline_pairs:
            pdict[key] = cast(pipeline_pairs[key])
    if "rotation_correction" in pipeline_pairs:
        pdict["rotation_correction"] = _parse_bool(pipeline_pairs["rotation_correction"])
    pipeline = PipelineConfig.from_dict(pdict) if pdict else PipelineConfig()

    try:
        cfg = TrainConfig(
            dataset_root=pairs["dataset_root"],
            catalog_path=pairs["catalog"],
            out_dir=pairs["out_dir"],
            cache_dir=pairs.get("cache_dir"),
            seed=int(pairs.get("seed", "0")),
            max_epochs=int(pairs.get("max_epochs", "100")),
            batch_size=int(pairs.get("batch_size", "32")),
            fractions=tuple(float(x) for x in pairs.get("fractions", "0.65,0.25,0.10").split(",")),
            pipeline=pipeline,
            num_classes=int(pairs["num_classes"]) if "num_classes" in pairs else None,
            dtype=pairs.get("dtype", "float32"),
            checkpoint_every=int(pairs.get("checkpoint_every", "0")),
            stop_at_val_acc=float(pairs["stop_at_val_acc"]) if "stop_at_val_acc" in pairs else None,
            resume=pairs.get("resume"),
        )
    except KeyError as exc:
        raise ArcError(f"train config is missing required key {exc}") from exc
    return cfg


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def cmd_preprocess(args) -> int:
    cfg = _load_pipeline(args.pipeline, args)
    _echo_config("preprocess", {"input": args.input, "output": args.output, "pipeline": cfg.to_dict(), "dump_stages": args.dump_stages})
    in_path = Path(args.input)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(p for p in in_path.iterdir() if p.is_file()) if in_path.is_dir() else [in_path]
    done = 0
    for path in files:
        frame = read_image(path)
        if args.dump_stages:
            dump_stages(frame, cfg, out_dir / path.stem)
        else:
            write_png(out_dir / f"{path.stem}.png", preprocess(frame, cfg))
        done += 1
    print(json.dumps({"processed": done}))
    return 0


def cmd_split(args) -> int:
    catalog = dataset_mod.Catalog.load(args.catalog)
    fractions = tuple(float(x) for x in args.fractions.split(","))
    _echo_config("split", {"root": args.root, "catalog": args.catalog, "seed": args.seed, "fractions": list(fractions)})
    index = dataset_mod.scan(args.root, catalog)
    index = dataset_mod.stratified_split(index, fractions, args.seed)
    dataset_mod.write_manifest(index, args.manifest)
    counts = {split: len(index.by_split(split)) for split in dataset_mod.SPLIT_NAMES}
    print(json.dumps({"manifest": args.manifest, "counts": counts}))
    return 0


def cmd_train(args) -> int:
    pairs = parse_kv_file(args.config)
    for override in args.set or []:
        if "=" not in override:
            raise ArcError(f"--set expects key=value, got {override!r}")
        key, value = override.split("=", 1)
        pairs[key.strip()] = value.strip()
    if args.seed is not None:
        pairs["seed"] = str(args.seed)
    if args.out_dir is not None:
        pairs["out_dir"] = args.out_dir
    if args.resume is not None:
        pairs["resume"] = args.resume
    cfg = train_config_from_pairs(pairs)
    _echo_config("train", cfg.describe())
    result = train(cfg)
    print(
        json.dumps(
            {
                "checkpoint": result.checkpoint_path,
                "best_checkpoint": result.best_checkpoint_path,
                "metrics": result.metrics_path,
                "epochs": len(result.history),
                "quarantined": result.quarantined,
            }
        )
    )
    return 0


def cmd_eval(args) -> int:
    cfg = _load_pipeline(args.pipeline)
    catalog = dataset_mod.Catalog.load(args.catalog)
    _echo_config("eval", {"checkpoint": args.checkpoint, "manifest": args.manifest, "split": args.split, "pipeline": cfg.to_dict()})
    index = dataset_mod.read_manifest(args.manifest)
    cache = dataset_mod.PreprocessCache(args.cache_dir) if args.cache_dir else None
    pool, quarantined = dataset_mod.build_pool(index, args.split, catalog, cfg, cache)
    network, _ = network_from_checkpoint(args.checkpoint)
    network.eval()
    result = evaluate(network, pool)
    if args.confusion_csv:
        Path(args.confusion_csv).write_text(result.confusion.counts_csv())
        pct_path = Path(args.confusion_csv).with_name(Path(args.confusion_csv).stem + "_pct.csv")
        pct_path.write_text(result.confusion.percentages_csv())
    print(json.dumps({"accuracy": result.accuracy, "loss": result.loss, "examples": len(pool), "quarantined": quarantined}))
    return 0


def cmd_infer(args) -> int:
    cfg = _load_pipeline(args.pipeline)
    _echo_config("infer", {"checkpoint": args.checkpoint, "image": args.image, "pipeline": cfg.to_dict()})
    network, meta = network_from_checkpoint(args.checkpoint)
    network.eval()
    frame = read_image(args.image)
    img = preprocess(frame, cfg)
    probs = network.forward(img.transpose(2, 0, 1).astype(np.float32) / 255.0)
    order = np.argsort(-probs, kind="stable")[:5]
    top5 = [{"item_id": int(i), "prob": float(probs[i])} for i in order]
    if args.catalog:
        catalog = dataset_mod.Catalog.load(args.catalog)
        for entry in top5:
            entry["name"] = catalog.by_id(entry["item_id"]).name
    print(json.dumps({"top5": top5, "top1": top5[0]["item_id"]}))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .dataset import Catalog
    from .service import CheckoutService, create_app, network_identifier

    cfg = _load_pipeline(args.pipeline)
    _echo_config(
        "serve",
        {
            "checkpoint": args.checkpoint,
            "catalog": args.catalog,
            "tau": args.tau,
            "host": args.host,
            "port": args.port,
            "persist": args.persist,
            "pipeline": cfg.to_dict(),
        },
    )
    catalog = Catalog.load(args.catalog)
    identifier = network_identifier(args.checkpoint, cfg)
    service = CheckoutService(catalog, identifier, tau=args.tau, persist_path=args.persist)
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arc", description="vision checkout toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("preprocess", help="run the frame pipeline over images")
    p.add_argument("--input", required=True, help="image file or directory")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--pipeline", help="pipeline config JSON file")
    p.add_argument("--belt", nargs=4, type=int, metavar=("X0", "Y0", "W", "H"), help="belt crop rectangle")
    p.add_argument("--no-rotation-correction", action="store_true")
    p.add_argument("--dump-stages", action="store_true", help="write per-stage PNGs per input")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("split", help="stratified train/val/test split")
    p.add_argument("--root", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fractions", default="0.65,0.25,0.10")
    p.add_argument("--manifest", required=True, help="output CSV path")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train from a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--resume", help="warm-start from a checkpoint")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--pipeline")
    p.add_argument("--cache-dir")
    p.add_argument("--confusion-csv", help="write confusion counts (and *_pct.csv) here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="classify one image, print top-5 JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--catalog")
    p.add_argument("--pipeline")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("serve", help="run the checkout HTTP service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--persist", help="append-only JSONL event log path")
    p.add_argument("--pipeline")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ArcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
