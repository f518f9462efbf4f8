"""embedder: convert an article table into an embedding file."""

from __future__ import annotations

import argparse
import sys

from .embed import EmbedderConfig, embed_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embedder", description=__doc__)
    parser.add_argument("--input", required=True, help="articles table (.csv or .jsonl)")
    parser.add_argument("--model", required=True, help="model identifier (see README)")
    parser.add_argument("--out", required=True, help="output embedding file")
    parser.add_argument("--format", choices=["jsonl", "binary"], default="binary")
    parser.add_argument("--max-sentence-tokens", type=int, default=256)
    parser.add_argument("--device", choices=["cpu", "accelerator"], default="cpu")
    return parser


def cli_main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = EmbedderConfig(
        model=args.model,
        max_sentence_tokens=args.max_sentence_tokens,
        output_format=args.format,
        device=args.device,
    )
    try:
        count = embed_corpus(args.input, cfg, args.out)
    except (FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} records to {args.out}")
    return 0


def main() -> None:
    sys.exit(cli_main())
