"""trace-export command line."""
from __future__ import annotations

import argparse
import sys

from .spec import (
    DEFAULT_MODELS,
    AugmentationSpec,
    ClassCountMismatch,
    DatasetNotFound,
    ExportSpec,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trace-export",
        description="Fine-tune CNN backbones on a class-per-folder image dataset "
                    "and write an engine-ready trace bundle.",
    )
    parser.add_argument("--data", required=True, help="dataset root (one folder per class)")
    parser.add_argument("--out", required=True, help="bundle directory to write")
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--image-size", type=int, default=128)
    parser.add_argument("--models", default=",".join(DEFAULT_MODELS),
                        help="comma list from: mobilenetv2,nasnetmobile,inceptionv3")
    parser.add_argument("--no-pretrained", action="store_true",
                        help="random init instead of ImageNet weights "
                             "(required when the weight cache is unavailable)")
    parser.add_argument("--no-augment", action="store_true",
                        help="disable the train-time augmentation stack")
    parser.add_argument("--expected-classes", type=int, default=None,
                        help="fail unless the dataset has exactly this many classes")
    parser.add_argument("--measure-latency", action="store_true",
                        help="record per-model single-input forward p50 into the manifest")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    aug = AugmentationSpec(False, False, False, False) if args.no_augment else AugmentationSpec()
    try:
        spec = ExportSpec(
            dataset=args.data,
            out=args.out,
            epochs=args.epochs,
            seed=args.seed,
            batch_size=args.batch_size,
            image_size=args.image_size,
            fractions=(0.8, 0.1, 0.1),
            models=tuple(m.strip() for m in args.models.split(",") if m.strip()),
            pretrained=not args.no_pretrained,
            augmentation=aug,
            expected_classes=args.expected_classes,
            measure_latency=args.measure_latency,
        )
        from .export import export

        out = export(spec)
    except (DatasetNotFound, ClassCountMismatch, ValueError) as exc:
        detail = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {detail}", file=sys.stderr)
        return 1
    print(f"wrote bundle for {len(spec.models)} models to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
