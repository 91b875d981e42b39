"""Command-line entry point: label, train, generate, evaluate, serve."""

import argparse
import os
import sys
from pathlib import Path

from .colors import CLASSES


def _add_ckpt_arg(parser):
    parser.add_argument(
        "--ckpt",
        default=os.environ.get("LOGAN_CKPT"),
        help="checkpoint path (default: $LOGAN_CKPT)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logan",
        description="Color-conditioned logo generation workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_label = sub.add_parser("label", help="label a corpus and write the CSV")
    p_label.add_argument("input", help="PNG directory or packed .bin/.json container")
    p_label.add_argument("output", help="label CSV to write")

    p_train = sub.add_parser("train", help="train from a config file")
    p_train.add_argument("config", help="key=value training config file")
    src = p_train.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="corpus path (PNG dir or container)")
    src.add_argument(
        "--synth", type=int, metavar="N",
        help="train on a synthetic corpus with N icons per class",
    )
    p_train.add_argument("--out", default="train_out", help="output directory")

    p_gen = sub.add_parser("generate", help="sample icons from a checkpoint")
    p_gen.add_argument("--class", dest="class_name", required=True, choices=CLASSES)
    p_gen.add_argument("--count", type=int, default=1)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", default="generated", help="output directory")
    _add_ckpt_arg(p_gen)

    p_eval = sub.add_parser("evaluate", help="score conditional fidelity")
    p_eval.add_argument("--out", default="report.json", help="report path")
    p_eval.add_argument("--n-per-class", type=int, default=64)
    p_eval.add_argument("--seed", type=int, default=0)
    _add_ckpt_arg(p_eval)

    p_serve = sub.add_parser("serve", help="run the generation API")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")
    _add_ckpt_arg(p_serve)
    return parser


def _load_bundle(parser, args):
    if not args.ckpt:
        parser.error("no checkpoint: pass --ckpt or set LOGAN_CKPT")
    from .checkpoint import load_checkpoint

    bundle, _ = load_checkpoint(args.ckpt)
    return bundle


def _cmd_label(args):
    from .dataset import build_corpus, load_icons

    corpus = build_corpus(load_icons(args.input), csv_path=args.output)
    print(f"labeled {len(corpus)} icons -> {args.output}")
    for cls in CLASSES:
        print(f"  {cls:7s} {corpus.class_histogram[cls]}")
    return 0


def _cmd_train(args):
    from .config import load_config
    from .dataset import build_corpus, load_icons, synth_corpus
    from .training import train

    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.synth is not None:
        corpus = synth_corpus(args.synth, seed=cfg.seed_data)
    else:
        corpus = build_corpus(load_icons(args.data), csv_path=out / "labels.csv")
    print(f"training on {len(corpus)} icons, {cfg.epochs} epochs")
    result = train(cfg, corpus, out_dir=out)
    last = result.checkpoints[-1] if result.checkpoints else None
    print(f"done: {result.bundle.generator_steps} generator steps, "
          f"{result.bundle.critic_steps} critic steps")
    if last:
        print(f"checkpoint: {last}")
    return 0


def _cmd_generate(parser, args):
    import numpy as np
    from PIL import Image

    from .training import png_bytes, tile_grid

    if not 1 <= args.count <= 256:
        parser.error("--count must be in 1..256")
    bundle = _load_bundle(parser, args)
    seed = args.seed if args.seed is not None else int.from_bytes(os.urandom(4), "big") >> 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = bundle.generate(CLASSES.index(args.class_name), args.count, seed)
    for i, img in enumerate(images):
        Image.fromarray(img).save(out / f"{args.class_name}_{i:03d}.png")
    (out / "grid.png").write_bytes(png_bytes(tile_grid(np.asarray(images))))
    print(f"wrote {args.count} {args.class_name} icon(s) + grid.png to {out} (seed {seed})")
    return 0


def _cmd_evaluate(parser, args):
    from .evaluation import evaluate_generation

    bundle = _load_bundle(parser, args)
    report = evaluate_generation(bundle, n_per_class=args.n_per_class, seed=args.seed)
    report.save(args.out)
    avg = report.averages
    print(f"report -> {args.out}")
    print(f"averages: precision={avg['precision']} recall={avg['recall']} f1={avg['f1']}")
    return 0


def _cmd_serve(parser, args):
    import uvicorn

    from .service import create_app

    bundle = _load_bundle(parser, args)
    app = create_app(bundle)
    print(f"serving checkpoint {bundle.checkpoint_id} on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "label":
            return _cmd_label(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "generate":
            return _cmd_generate(parser, args)
        if args.command == "evaluate":
            return _cmd_evaluate(parser, args)
        if args.command == "serve":
            return _cmd_serve(parser, args)
        parser.error(f"unknown command {args.command}")
    except SystemExit:
        raise
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
