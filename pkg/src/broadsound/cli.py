"""Command-line entry point.

Subcommands wire the library modules into reproducible pipeline runs:

    split          assign train/eval records in a manifest
    fit-repr       fit representation models on the train split
    grid           exhaustive k-NN hyperparameter search
    eval           score predictions (files or a saved model)
    export-errors  build the human review queue from a report
    serve          run the local review service

Every command writes a ``run_meta.json`` (config, seed, versions) next to
its outputs. All randomness flows through the single --seed value, so a
rerun with identical inputs is byte-identical (pass --stable-output to
drop wall-clock timestamps from the metadata).

Exit codes: 0 success, 2 usage error, 1 data error, 3 internal error.
A YAML file passed via --config overrides same-named flags, and the
BROADSOUND_DATA_ROOT environment variable (or --data-root) anchors
relative input paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import yaml

from broadsound import __version__
from broadsound import dataset as ds
from broadsound import evaluation, knn, pipeline, workflow
from broadsound.errors import BroadsoundError, DataError
from broadsound.review.service import ReviewService
from broadsound.review.store import AnnotationStore
from broadsound.taxonomy import Level, Taxonomy, load_default_taxonomy, load_taxonomy

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _load_taxonomy(path: str | None) -> Taxonomy:
    if path is None:
        return load_default_taxonomy()
    return load_taxonomy(Path(path).read_text(encoding="utf-8"))


def _resolve(args, path: str | None) -> Path | None:
    """Anchor relative input paths at the data root when one is set."""
    if path is None:
        return None
    p = Path(path)
    if not p.is_absolute() and args.data_root:
        return Path(args.data_root) / p
    return p


def _write_run_meta(args, out_dir: Path, command: str, config: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "package_version": __version__,
        "python_version": sys.version.split()[0],
    }
    if not args.stable_output:
        meta["created_at"] = datetime.now(timezone.utc).isoformat()
    (out_dir / "run_meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _parse_level(name: str) -> Level:
    return Level.SECOND if name == "second" else Level.TOP


def _write_report(out_dir: Path, report: evaluation.EvaluationReport) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (out_dir / "confusion.csv").write_text(report.confusion.to_csv(), encoding="utf-8")


# ---- subcommands -----------------------------------------------------------


def cmd_split(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    manifest = ds.read_manifest(_resolve(args, args.manifest), taxonomy)
    out_dir = Path(args.out)
    result = ds.make_split(manifest, taxonomy, args.per_class, args.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds.write_manifest(result, out_dir / "manifest.jsonl")
    _write_run_meta(args, out_dir, "split", {
        "manifest": str(args.manifest), "per_class": args.per_class, "seed": args.seed,
    })
    n_eval = len(result.subset(ds.Split.EVAL))
    print(f"split written: {n_eval} eval / {len(result) - n_eval} train records")
    return EXIT_OK


def cmd_fit_repr(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    manifest_path = _resolve(args, args.manifest)
    manifest = ds.read_manifest(manifest_path, taxonomy)
    models = workflow.fit_pipeline_on_train(
        manifest_path.parent, manifest, args.kind, pca_dims=args.pca_dims
    )
    out_dir = Path(args.out)
    pipeline.save_pipeline(models, out_dir / "pipeline")
    _write_run_meta(args, out_dir, "fit-repr", {
        "manifest": str(args.manifest), "kind": args.kind,
        "pca_dims": args.pca_dims, "seed": args.seed,
    })
    print(f"fitted {args.kind} pipeline models -> {out_dir / 'pipeline'}")
    return EXIT_OK


def _load_xy(args, taxonomy: Taxonomy, level: Level):
    manifest_path = _resolve(args, args.manifest)
    manifest = ds.read_manifest(manifest_path, taxonomy)
    if args.pipeline:
        fitted = pipeline.load_pipeline(_resolve(args, args.pipeline))
    else:
        fitted = workflow.fit_pipeline_on_train(manifest_path.parent, manifest, args.kind)
    train = workflow.build_design_matrix(
        manifest_path.parent, manifest, args.kind, fitted, ds.Split.TRAIN, taxonomy, level
    )
    evl = workflow.build_design_matrix(
        manifest_path.parent, manifest, args.kind, fitted, ds.Split.EVAL, taxonomy, level
    )
    return manifest, train, evl


def cmd_grid(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    level = _parse_level(args.level)
    _, (train_x, train_y, _), (eval_x, eval_y, eval_ids) = _load_xy(args, taxonomy, level)
    k_values = [int(v) for v in args.k_values.split(",")]
    metrics = args.metrics.split(",")
    weightings = args.weightings.split(",")
    report = knn.grid_search(
        train_x, train_y, eval_x, eval_y, k_values, metrics, weightings,
        label_level=args.level,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "grid_report.json").write_text(
        json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    best_model = knn.KnnModel(train_x, train_y, report.best, label_level=args.level)
    knn.save_model(best_model, out_dir / "best_model.bsdk")
    eval_report = evaluation.evaluate(
        best_model.predict_batch(eval_x), eval_y, taxonomy, level, eval_ids
    )
    _write_report(out_dir, eval_report)
    _write_run_meta(args, out_dir, "grid", {
        "manifest": str(args.manifest), "kind": args.kind, "level": args.level,
        "k_values": args.k_values, "metrics": args.metrics,
        "weightings": args.weightings, "seed": args.seed,
    })
    best = report.best
    print(
        f"grid done: best k={best.k} metric={best.metric} weighting={best.weighting} "
        f"accuracy={report.rows[0].accuracy:.3f} top100_spread={report.top100_spread:.3f}"
    )
    return EXIT_OK


def _read_label_file(path: Path) -> list[str]:
    try:
        return [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read label file {path}: {exc}") from exc


def cmd_eval(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    level = _parse_level(args.level)
    if args.pred and args.truth:
        preds = _read_label_file(_resolve(args, args.pred))
        truths = _read_label_file(_resolve(args, args.truth))
        report = evaluation.evaluate(preds, truths, taxonomy, level)
    elif args.model:
        model = knn.load_model(_resolve(args, args.model))
        if model.label_level != args.level:
            raise DataError(
                f"model is {model.label_level}-level but --level is {args.level}"
            )
        manifest_path = _resolve(args, args.manifest)
        manifest = ds.read_manifest(manifest_path, taxonomy)
        fitted = (
            pipeline.load_pipeline(_resolve(args, args.pipeline))
            if args.pipeline
            else workflow.fit_pipeline_on_train(manifest_path.parent, manifest, args.kind)
        )
        eval_x, eval_y, eval_ids = workflow.build_design_matrix(
            manifest_path.parent, manifest, args.kind, fitted, ds.Split.EVAL,
            taxonomy, level,
        )
        report = evaluation.evaluate(
            model.predict_batch(eval_x), eval_y, taxonomy, level, eval_ids
        )
    else:
        raise DataError("eval needs either --pred/--truth files or --model/--manifest")
    out_dir = Path(args.out)
    _write_report(out_dir, report)
    _write_run_meta(args, out_dir, "eval", {
        "pred": args.pred, "truth": args.truth, "model": args.model,
        "level": args.level, "seed": args.seed,
    })
    print(f"accuracy={report.accuracy:.4f} macro_f1={report.macro_f1:.4f}")
    return EXIT_OK


def cmd_export_errors(args) -> int:
    report_doc = json.loads(_resolve(args, args.report).read_text(encoding="utf-8"))
    misclassified = [
        (e["sound_id"], e["true_code"], e["predicted_code"])
        for e in report_doc.get("misclassified", [])
    ]
    manifest = None
    if args.manifest:
        manifest = ds.read_manifest(_resolve(args, args.manifest))
    entries = evaluation.export_misclassifications(
        misclassified, manifest=manifest,
        sample="all" if args.sample == "all" else int(args.sample),
        seed=args.seed,
    )
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    evaluation.write_review_queue(entries, out_path)
    _write_run_meta(args, out_path.parent, "export-errors", {
        "report": str(args.report), "sample": args.sample, "seed": args.seed,
    })
    print(f"review queue with {len(entries)} entries -> {out_path}")
    return EXIT_OK


def cmd_serve(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    queue = evaluation.read_review_queue(_resolve(args, args.queue))
    manifest_path = _resolve(args, args.manifest)
    manifest = ds.read_manifest(manifest_path, taxonomy)
    store = AnnotationStore(_resolve(args, args.store))
    service = ReviewService(
        queue=queue,
        manifest=manifest,
        store=store,
        taxonomy=taxonomy,
        audio_root=manifest_path.parent,
        ui_dir=args.ui,
    )
    print(f"review service on http://{args.bind} ({len(queue)} queue entries)")
    sys.stdout.flush()
    service.serve_forever(args.bind)
    return EXIT_OK


# ---- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="broadsound",
        description="Broad sound taxonomy classification and evaluation pipelines.",
        epilog="Exit codes: 0 ok, 2 usage error, 1 data error, 3 internal error.",
    )
    parser.add_argument("--config", help="YAML file whose values override flags")
    parser.add_argument(
        "--data-root",
        default=os.environ.get("BROADSOUND_DATA_ROOT"),
        help="base directory for relative input paths (env: BROADSOUND_DATA_ROOT)",
    )
    parser.add_argument(
        "--stable-output", action="store_true",
        help="omit wall-clock timestamps from run metadata",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="assign train/eval records")
    p.add_argument("--manifest", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("fit-repr", help="fit representation models on the train split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--kind", "--repr", required=True, choices=pipeline.REPR_KINDS)
    p.add_argument("--pca-dims", type=int, default=pipeline.FSSIMREP_PCA_DIMS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_repr)

    p = sub.add_parser("grid", help="exhaustive k-NN hyperparameter search")
    p.add_argument("--manifest", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--kind", "--repr", required=True, choices=pipeline.REPR_KINDS)
    p.add_argument("--level", choices=("second", "top"), default="second")
    p.add_argument("--pipeline", help="directory of previously fitted models")
    p.add_argument("--k-values", default=",".join(str(k) for k in knn.DEFAULT_K_VALUES))
    p.add_argument("--metrics", default=",".join(knn.METRICS))
    p.add_argument("--weightings", default=",".join(knn.WEIGHTINGS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("eval", help="score predictions")
    p.add_argument("--pred", help="file of predicted codes, one per line")
    p.add_argument("--truth", help="file of true codes, one per line")
    p.add_argument("--model", help="saved k-NN model file")
    p.add_argument("--manifest")
    p.add_argument("--taxonomy")
    p.add_argument("--kind", "--repr", choices=pipeline.REPR_KINDS)
    p.add_argument("--pipeline")
    p.add_argument("--level", choices=("second", "top"), default="second")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-errors", help="build the human review queue")
    p.add_argument("--report", required=True, help="report.json from eval/grid")
    p.add_argument("--manifest")
    p.add_argument("--sample", default="all", help="'all' or a sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_errors)

    p = sub.add_parser("serve", help="run the review service")
    p.add_argument("--queue", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.add_argument("--taxonomy")
    p.add_argument("--ui", help="directory of built UI assets to serve")
    p.set_defaults(func=cmd_serve)
    return parser


def _apply_config_overrides(parser: argparse.ArgumentParser, args) -> None:
    if not args.config:
        return
    try:
        doc = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        parser.error(f"cannot read config file: {exc}")
    if not isinstance(doc, dict):
        parser.error("config file must be a mapping of option names to values")
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            parser.error(f"config key {key!r} is not an option of {args.command!r}")
        setattr(args, dest, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_overrides(parser, args)
    try:
        return args.func(args)
    except BroadsoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
