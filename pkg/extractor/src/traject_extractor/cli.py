"""Command line: extract --model ID --prompts FILE --max-len N --out DIR --limit S."""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Dump per-layer hidden states and final-token attention rows "
        "of a causal transformer to RACT files.",
    )
    parser.add_argument("--model", required=True, help="model identifier or local path")
    parser.add_argument("--prompts", required=True, help="text file, one prompt per line")
    parser.add_argument("--max-len", type=int, default=512, help="truncation length (default: %(default)s)")
    parser.add_argument("--out", default="ract_out", help="output directory (default: %(default)s)")
    parser.add_argument("--limit", type=int, default=None, help="stop after this many successful samples")
    parser.add_argument("--pre-block", action="store_true",
                        help="dump each layer's input instead of its residual-stream output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(
            model=args.model,
            prompts=args.prompts,
            max_len=args.max_len,
            out_dir=args.out,
            limit=args.limit,
            post_block=not args.pre_block,
        )
        written = extract(job)
    except (ValueError, OSError) as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    if written == 0:
        print("ERROR: no sample could be extracted; see manifest.jsonl", file=sys.stderr)
        return 1
    print(f"wrote {written} sample(s) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
