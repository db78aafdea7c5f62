#!/usr/bin/env python3
"""Full-data evaluation: grid-search every representation at both levels.

Needs a prepared data root containing ``manifest.jsonl`` plus
``features/{fssimrep,vggish,fsdsinet,clap}/<sound_id>.fvec`` extracted from
the real BSD10k audio (see the extractor package). Reports best accuracy
and macro-F1 per representation and level, the top-100 grid spread, and
the fraction of second-level errors the dedicated top-level classifier
recovers.

Usage:
    python scripts/reproduce_full_eval.py --root DATA_DIR [--kinds clap,vggish]
"""

import argparse
import sys
import time
from pathlib import Path

from broadsound import dataset as ds
from broadsound import evaluation, knn, workflow
from broadsound.pipeline import REPR_KINDS
from broadsound.taxonomy import Level, load_default_taxonomy


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", required=True)
    parser.add_argument("--kinds", default=",".join(REPR_KINDS))
    parser.add_argument("--per-class", type=int, default=40)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    root = Path(args.root)
    taxonomy = load_default_taxonomy()
    manifest = ds.read_manifest(root / "manifest.jsonl", taxonomy)
    split = ds.make_split(manifest, taxonomy, per_class=args.per_class, seed=args.seed)
    n_eval = len(split.subset(ds.Split.EVAL))
    print(f"{len(split)} records, {n_eval} eval ({args.per_class}/class, seed {args.seed})")

    best = {}
    for kind in args.kinds.split(","):
        fitted = workflow.fit_pipeline_on_train(root, split, kind)
        for level_name, level in (("second", Level.SECOND), ("top", Level.TOP)):
            started = time.monotonic()
            train_x, train_y, _ = workflow.build_design_matrix(
                root, split, kind, fitted, ds.Split.TRAIN, taxonomy, level
            )
            eval_x, eval_y, eval_ids = workflow.build_design_matrix(
                root, split, kind, fitted, ds.Split.EVAL, taxonomy, level
            )
            result = knn.grid_search(
                train_x, train_y, eval_x, eval_y, label_level=level_name
            )
            row = result.rows[0]
            elapsed = time.monotonic() - started
            print(
                f"{kind:<9} {level_name:<7} accuracy={row.accuracy:.3f} "
                f"macro_f1={row.macro_f1:.3f} spread={result.top100_spread:.3f} "
                f"best(k={row.config.k},{row.config.metric},{row.config.weighting}) "
                f"[{elapsed:.0f}s]"
            )
            best[(kind, level_name)] = (
                knn.KnnModel(train_x, train_y, result.best, level_name),
                eval_x, eval_y,
            )

    for kind in args.kinds.split(","):
        if (kind, "second") not in best or (kind, "top") not in best:
            continue
        second_model, eval_x, eval_y = best[(kind, "second")]
        top_model, _, _ = best[(kind, "top")]
        consistency = evaluation.hierarchical_consistency(
            second_model.predict_batch(eval_x),
            top_model.predict_batch(eval_x),
            eval_y,
            taxonomy,
        )
        frac = consistency.recovered_fraction
        print(
            f"{kind:<9} second-level errors: {consistency.n_second_errors}, "
            f"recovered at top: {consistency.n_recovered_at_top} "
            f"({'n/a' if frac is None else f'{frac:.2f}'})"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
