#!/usr/bin/env python3
"""Generate a BSD10k-shaped synthetic dataset for desk-scale runs.

Writes a manifest with the published class-count shape (10,309 records,
top-level totals 1635/2094/1250/3911/1419) and, optionally, clustered
clap-style feature files so the whole split/grid/eval pipeline can run
without real embeddings.

Usage:
    python scripts/make_synthetic_bsd10k.py --out data/synth [--features]
"""

import argparse
from pathlib import Path

import numpy as np

from broadsound import dataset as ds
from broadsound import fvec
from broadsound.synth import bsd10k_shaped_manifest
from broadsound.taxonomy import Level, load_default_taxonomy


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--features", action="store_true",
        help="also write clustered 512-d clap feature files (one per record)",
    )
    parser.add_argument(
        "--feature-noise", type=float, default=1.5,
        help="cluster sigma relative to unit centroid separation",
    )
    args = parser.parse_args()

    taxonomy = load_default_taxonomy()
    manifest = bsd10k_shaped_manifest(taxonomy, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds.write_manifest(manifest, out / "manifest.jsonl")
    print(f"wrote {len(manifest)} records -> {out / 'manifest.jsonl'}")

    if args.features:
        manifest.feature_set_ids = ["clap"]
        ds.write_manifest(manifest, out / "manifest.jsonl")
        rng = np.random.default_rng(args.seed)
        codes = taxonomy.codes(Level.SECOND)
        centroids = {code: np.zeros(512) for code in codes}
        for i, code in enumerate(codes):
            centroids[code][i] = 10.0
        feat_dir = out / "features" / "clap"
        feat_dir.mkdir(parents=True, exist_ok=True)
        for rec in manifest.records:
            vec = centroids[rec.second_label] + rng.normal(
                scale=args.feature_noise, size=512
            )
            fvec.write(feat_dir / f"{rec.sound_id}.fvec", vec[None, :].astype(np.float32))
        print(f"wrote {len(manifest)} feature files -> {feat_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
