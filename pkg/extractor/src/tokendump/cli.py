"""Command-line front end: tokendump extract."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ExtractorError
from .extract import IMAGE_SUFFIXES, ExtractionJob, extract


def collect_images(directory) -> list[Path]:
    root = Path(directory)
    if not root.is_dir():
        raise ExtractorError(f"{root} is not a directory")
    found = sorted(
        p for p in root.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not found:
        raise ExtractorError(f"no images ({', '.join(IMAGE_SUFFIXES)}) in {root}")
    return found


def _layer(text: str):
    if text == "penultimate":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"layer must be 'penultimate' or an integer, got {text!r}"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokendump",
        description="Dump vision-encoder patch tokens and CLS attention to .tpk1 files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run the encoder over a directory of images")
    p.add_argument("--model", required=True, help="checkpoint path or hub identifier")
    p.add_argument("--images", required=True, help="directory of input images")
    p.add_argument("--out", required=True, help="output directory for dumps + manifest")
    p.add_argument(
        "--layer",
        type=_layer,
        default="penultimate",
        help="attention layer: 'penultimate' (default) or a 0-based index",
    )
    p.add_argument(
        "--post-projector",
        action="store_true",
        help="apply the checkpoint's visual projection to every patch row",
    )
    p.add_argument("--device", default="cpu", help="torch device (default cpu)")
    p.set_defaults(func=_cmd_extract)
    return parser


def _cmd_extract(args) -> int:
    job = ExtractionJob(
        model_id=args.model,
        image_paths=tuple(collect_images(args.images)),
        out_dir=Path(args.out),
        layer=args.layer,
        post_projector=args.post_projector,
        device=args.device,
    )
    for path in extract(job):
        print(path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
