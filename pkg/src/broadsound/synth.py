"""Synthetic datasets for benchmarks and acceptance checks.

Real embeddings are large and externally licensed, so desk-scale runs
use: (a) a manifest replica shaped like the public BSD10k release
(10,309 records; top-level totals 1635/2094/1250/3911/1419 with the
same skew between popular and ~100-sound classes), and (b) separable
Gaussian cluster sets with a controlled centroid/spread ratio.
"""

from __future__ import annotations

import numpy as np

from broadsound.dataset import CONFIDENCE_LEVELS, DatasetManifest, SoundRecord
from broadsound.errors import DataError
from broadsound.taxonomy import Level, Taxonomy

# per-class record counts of the BSD10k-shaped replica; sums per top class
# are 1635 / 2094 / 1250 / 3911 / 1419 (10,309 records total)
BSD10K_SHAPE = {
    "solo-instrument": 700,
    "multiple-instruments": 400,
    "electronic-music": 335,
    "experimental-music": 200,
    "percussion": 800,
    "string-instruments": 494,
    "wind-instruments": 300,
    "keyboard-instruments": 250,
    "synths-electronic-samples": 250,
    "solo-speech": 700,
    "conversation-crowd": 350,
    "processed-speech": 200,
    "human-sounds-and-actions": 1200,
    "animals": 450,
    "natural-sounds-and-explosions": 561,
    "mechanisms-engines-machines": 600,
    "vehicles": 400,
    "objects-materials": 500,
    "designed-effects": 200,
    "nature-soundscapes": 600,
    "urban-soundscapes": 419,
    "indoor-soundscapes": 250,
    "synthetic-soundscapes": 150,
}


def bsd10k_shaped_manifest(taxonomy: Taxonomy, seed: int = 0) -> DatasetManifest:
    """Manifest replica with BSD10k's published class-count shape."""
    codes = set(taxonomy.codes(Level.SECOND))
    missing = codes.symmetric_difference(BSD10K_SHAPE)
    if missing:
        raise DataError(f"taxonomy does not match the replica shape: {sorted(missing)}")
    rng = np.random.default_rng(seed)
    records = []
    for code in taxonomy.codes(Level.SECOND):
        for i in range(BSD10K_SHAPE[code]):
            records.append(
                SoundRecord(
                    sound_id=f"{code}-{i:05d}",
                    second_label=code,
                    duration_s=float(np.round(rng.uniform(0.3, 30.0), 3)),
                    annotator_confidence=CONFIDENCE_LEVELS[int(rng.integers(3))],
                )
            )
    return DatasetManifest(records=records, taxonomy_version=taxonomy.version)


def cluster_dataset(
    n_classes: int,
    train_per_class: int,
    eval_per_class: int,
    dims: int | None = None,
    separation: float = 10.0,
    sigma: float = 1.0,
    seed: int = 0,
) -> tuple[np.ndarray, list[str], np.ndarray, list[str]]:
    """Well-separated Gaussian clusters, one per class.

    Centroids sit on scaled coordinate axes, so every pair is at least
    ``separation * sigma`` apart while points scatter with std ``sigma``.
    Returns (train_x, train_labels, eval_x, eval_labels).
    """
    if dims is None:
        dims = n_classes
    if dims < n_classes:
        raise DataError("need dims >= n_classes to place separated centroids")
    rng = np.random.default_rng(seed)
    centroids = np.eye(n_classes, dims) * separation * sigma
    labels = [f"c{i:02d}" for i in range(n_classes)]

    def draw(per_class: int) -> tuple[np.ndarray, list[str]]:
        xs, ys = [], []
        for i, label in enumerate(labels):
            xs.append(centroids[i] + rng.normal(scale=sigma, size=(per_class, dims)))
            ys.extend([label] * per_class)
        return np.vstack(xs), ys

    train_x, train_y = draw(train_per_class)
    eval_x, eval_y = draw(eval_per_class)
    return train_x, train_y, eval_x, eval_y
