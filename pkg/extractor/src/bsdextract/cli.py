"""bsdextract command line: run embedding extraction over a WAV directory."""

from __future__ import annotations

import argparse
import sys

from bsdextract.backends import MissingModelAssets
from bsdextract.extract import ExtractError, extract_directory
from bsdextract.specs import EXTRACTOR_SPECS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsdextract",
        description="Extract audio embeddings into FVEC feature files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="embed every .wav in a directory")
    p.add_argument("--kind", required=True, choices=sorted(EXTRACTOR_SPECS))
    p.add_argument("--in", dest="in_dir", required=True, help="directory of standardized WAVs")
    p.add_argument("--out", dest="out_dir", required=True, help="feature-set output directory")
    p.add_argument("--manifest", help="dataset manifest to update (feature_set_ids)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = extract_directory(args.kind, args.in_dir, args.out_dir, args.manifest)
    except MissingModelAssets as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"extracted {len(result.written)} {result.kind} feature files "
        f"(checkpoint {result.checkpoint_id}) -> {args.out_dir}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
