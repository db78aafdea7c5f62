"""End-to-end glue: manifests + feature files -> design matrices and models."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from broadsound import dataset as ds
from broadsound.errors import DataError
from broadsound.pipeline import (
    FeatureMatrix,
    PipelineModels,
    build_representation,
    fit_pipeline,
)
from broadsound.taxonomy import Level, Taxonomy


def fit_pipeline_on_train(
    manifest_dir: str | Path,
    manifest: ds.DatasetManifest,
    kind: str,
    pca_dims: int = 100,
) -> PipelineModels:
    """Fit representation models on the train split only."""
    train = manifest.subset(ds.Split.TRAIN)
    if not train:
        raise DataError("manifest has no train records; run the split first")
    if kind != "fssimrep":
        return fit_pipeline(kind, [])
    matrices = [
        FeatureMatrix(sound_id=rec.sound_id, values=values)
        for rec, values in ds.load_features(manifest_dir, train, kind)
    ]
    return fit_pipeline(kind, matrices, pca_dims=pca_dims)


def build_design_matrix(
    manifest_dir: str | Path,
    manifest: ds.DatasetManifest,
    kind: str,
    fitted: PipelineModels,
    split: ds.Split,
    taxonomy: Taxonomy,
    level: Level = Level.SECOND,
) -> tuple[np.ndarray, list[str], list[str]]:
    """Representation matrix, labels at ``level``, and sound ids for a split."""
    records = manifest.subset(split)
    if not records:
        raise DataError(f"manifest has no {split.value} records")
    rows, labels, ids = [], [], []
    for rec, values in ds.load_features(manifest_dir, records, kind):
        m = FeatureMatrix(sound_id=rec.sound_id, values=values)
        rows.append(build_representation(kind, m, fitted))
        label = rec.second_label
        if level is Level.TOP:
            label = taxonomy.parent_of(label)
        labels.append(label)
        ids.append(rec.sound_id)
    return np.vstack(rows), labels, ids
