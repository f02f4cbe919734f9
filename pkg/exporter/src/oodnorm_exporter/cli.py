"""CLI for dataset export, demo training, and model export."""

from __future__ import annotations

import argparse
import json
import logging
import sys


def cmd_dataset(args) -> int:
    from .export_dataset import DatasetPlan, export_dataset

    ood_dirs = {}
    for entry in args.ood or []:
        name, _, folder = entry.partition("=")
        if not folder:
            raise SystemExit(f"error: --ood wants NAME=DIR, got {entry!r}")
        ood_dirs[name] = folder
    plan = DatasetPlan(
        out_dir=args.out,
        size=args.size,
        mean=tuple(args.mean),
        std=tuple(args.std),
        seed=args.seed,
        synthetic_train=args.synthetic,
        synthetic_test=args.synthetic_test,
        noise_ood=args.noise_ood,
        id_train_dir=args.id_train,
        id_test_dir=args.id_test,
        ood_dirs=ood_dirs,
    )
    report = export_dataset(plan)
    print(json.dumps(report, indent=2))
    return 0


def cmd_train(args) -> int:
    from .train import train_demo

    report = train_demo(
        args.manifest,
        args.out,
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch_size,
        lr=args.lr,
        channels=tuple(args.channels),
        order_style=args.order_style,
    )
    print(json.dumps(report, indent=2))
    return 0


def cmd_model(args) -> int:
    from .export_model import ExportError, ExportPlan, export_model

    plan = ExportPlan(
        checkpoint=args.checkpoint,
        out_dir=args.out,
        verify=not args.no_verify,
        verify_tolerance=args.tolerance,
    )
    try:
        report = export_model(plan)
    except ExportError as exc:
        raise SystemExit(f"error: {exc}")
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oodnorm-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="emit normalized tensors plus a manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--mean", type=float, nargs=3, default=[0.5, 0.5, 0.5])
    p.add_argument("--std", type=float, nargs=3, default=[0.25, 0.25, 0.25])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--synthetic", type=int, default=0, help="synthetic two-class train images")
    p.add_argument("--synthetic-test", type=int, default=0)
    p.add_argument("--noise-ood", type=int, default=0, help="uniform-noise OOD tensors")
    p.add_argument("--id-train", default=None, help="image folder for the training split")
    p.add_argument("--id-test", default=None)
    p.add_argument("--ood", action="append", metavar="NAME=DIR")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train the demo CNN on an exported dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--channels", type=int, nargs="+", default=[16, 32, 64])
    p.add_argument("--order-style", default="Conv-BN-ReLU",
                   choices=["Conv-BN-ReLU", "BN-ReLU-Conv"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("model", help="convert a checkpoint into an engine model directory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-verify", action="store_true")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_model)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
