"""Fixed-length sound representations from per-sound feature matrices.

Four representation kinds are supported:

* ``fssimrep``  : 1x846 acoustic descriptor vector, min-max scaled to
  [0, 1] per dimension and reduced to 100 dims with PCA.
* ``vggish``    : (n, 128) frame embeddings, mean over frames.
* ``fsdsinet``  : (n, 512) frame embeddings, mean over frames.
* ``clap``      : 1x512 clip embedding, passed through unchanged.

Scaler and PCA are fitted on the train split only and applied to eval
vectors afterwards; transforms are pure functions over immutable fitted
models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from broadsound.errors import DataError

REPR_KINDS = ("fssimrep", "vggish", "fsdsinet", "clap")

# expected input dims per kind, and whether the input is a single clip vector
REPR_INPUT_DIMS = {"fssimrep": 846, "vggish": 128, "fsdsinet": 512, "clap": 512}
REPR_CLIP_LEVEL = {"fssimrep": True, "vggish": False, "fsdsinet": False, "clap": True}
FSSIMREP_PCA_DIMS = 100

PCA_ORTHONORMALITY_TOL = 1e-6


@dataclass(frozen=True)
class FeatureMatrix:
    """An (n_frames, dims) matrix of finite reals for one sound."""

    sound_id: str
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(
                f"feature matrix for {self.sound_id!r} must be 2-D and non-empty, "
                f"got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DataError(f"feature matrix for {self.sound_id!r} has non-finite entries")
        object.__setattr__(self, "values", arr)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]


def aggregate_mean(m: FeatureMatrix) -> FeatureMatrix:
    """Collapse frames to a single vector of column means (float64)."""
    mean = np.asarray(m.values, dtype=np.float64).mean(axis=0, keepdims=True)
    return FeatureMatrix(sound_id=m.sound_id, values=mean)


def _as_vector_block(train: Iterable[FeatureMatrix] | np.ndarray) -> np.ndarray:
    """Stack clip-level inputs into an (n, d) float64 block."""
    if isinstance(train, np.ndarray):
        block = np.asarray(train, dtype=np.float64)
        if block.ndim != 2:
            raise DataError(f"training block must be 2-D, got shape {block.shape}")
        return block
    rows = []
    for m in train:
        if m.n_frames != 1:
            raise DataError(
                f"clip-level vector expected for {m.sound_id!r}, got {m.n_frames} frames"
            )
        rows.append(np.asarray(m.values[0], dtype=np.float64))
    if not rows:
        raise DataError("empty training set")
    dims = {r.shape[0] for r in rows}
    if len(dims) != 1:
        raise DataError(f"training vectors disagree on dims: {sorted(dims)}")
    return np.vstack(rows)


@dataclass(frozen=True)
class ScalerModel:
    """Per-dimension min-max bounds mapping train data into [0, 1]."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        mn = np.asarray(self.min, dtype=np.float64)
        mx = np.asarray(self.max, dtype=np.float64)
        if mn.shape != mx.shape or mn.ndim != 1:
            raise DataError("scaler min/max must be 1-D vectors of equal length")
        if np.any(mn > mx):
            raise DataError("scaler requires min[i] <= max[i]")
        object.__setattr__(self, "min", mn)
        object.__setattr__(self, "max", mx)

    @property
    def dims(self) -> int:
        return self.min.shape[0]


def fit_scaler(train: Iterable[FeatureMatrix] | np.ndarray) -> ScalerModel:
    block = _as_vector_block(train)
    if block.shape[0] < 1:
        raise DataError("empty training set")
    return ScalerModel(min=block.min(axis=0), max=block.max(axis=0))


def apply_scaler(scaler: ScalerModel, v: np.ndarray) -> np.ndarray:
    """(v - min) / (max - min), clamped to [0, 1]; constant dims map to 0."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (scaler.dims,):
        raise DataError(f"expected a {scaler.dims}-vector, got shape {v.shape}")
    span = scaler.max - scaler.min
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (v - scaler.min) / span
    out = np.where(span == 0, 0.0, out)
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class PcaModel:
    """Linear projection onto the top-k principal directions.

    ``components`` rows are orthonormal and variance-ordered; the sign of
    each row is fixed so its largest-magnitude entry is positive, which
    makes fitted models serialize deterministically.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        comps = np.asarray(self.components, dtype=np.float64)
        ev = np.asarray(self.explained_variance, dtype=np.float64)
        if comps.ndim != 2 or mean.ndim != 1 or comps.shape[1] != mean.shape[0]:
            raise DataError("inconsistent PCA model shapes")
        if ev.shape != (comps.shape[0],):
            raise DataError("explained_variance length must equal component count")
        if np.any(ev < -1e-12) or np.any(np.diff(ev) > 1e-12):
            raise DataError("explained_variance must be non-negative and non-increasing")
        gram = comps @ comps.T
        if np.max(np.abs(gram - np.eye(comps.shape[0]))) > PCA_ORTHONORMALITY_TOL:
            raise DataError("PCA components are not orthonormal")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "explained_variance", ev)

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def input_dims(self) -> int:
        return self.components.shape[1]


def fit_pca(train: Iterable[FeatureMatrix] | np.ndarray, k: int) -> PcaModel:
    """Fit covariance PCA (via SVD of the centered data) keeping k components.

    Requires at least k independent directions in the training data;
    degenerate inputs (e.g. all-identical vectors) raise instead of
    silently truncating.
    """
    block = _as_vector_block(train)
    n, d = block.shape
    if n < 2:
        raise DataError(f"PCA needs at least 2 training vectors, got {n}")
    if not (1 <= k <= min(n, d)):
        raise DataError(f"k={k} out of range for {n} vectors of {d} dims")

    mean = block.mean(axis=0)
    centered = block - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)

    tol = s[0] * max(n, d) * np.finfo(np.float64).eps
    rank = int(np.sum(s > tol))
    if rank < k:
        raise DataError(
            f"training data has only {rank} independent directions, cannot fit k={k}"
        )

    components = vt[:k]
    # resolve the sign ambiguity of each direction
    pivot = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(k), pivot])
    components = components * signs[:, None]

    explained = (s[:k] ** 2) / (n - 1)
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def apply_pca(pca: PcaModel, v: np.ndarray) -> np.ndarray:
    """Project a vector (or an (n, d) block row-wise): components @ (v - mean)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        if v.shape != (pca.input_dims,):
            raise DataError(f"expected a {pca.input_dims}-vector, got shape {v.shape}")
        return pca.components @ (v - pca.mean)
    if v.ndim == 2 and v.shape[1] == pca.input_dims:
        return (v - pca.mean) @ pca.components.T
    raise DataError(f"expected dims {pca.input_dims}, got shape {v.shape}")


def reconstruct(pca: PcaModel, projected: np.ndarray) -> np.ndarray:
    """Inverse of apply_pca up to the discarded directions."""
    projected = np.asarray(projected, dtype=np.float64)
    return projected @ pca.components + pca.mean


@dataclass(frozen=True)
class PipelineModels:
    """Fitted transforms a representation kind may require."""

    scaler: ScalerModel | None = None
    pca: PcaModel | None = None


def fit_pipeline(
    kind: str,
    train: Sequence[FeatureMatrix],
    pca_dims: int = FSSIMREP_PCA_DIMS,
) -> PipelineModels:
    """Fit whatever models ``kind`` needs from train-split matrices."""
    _check_kind(kind)
    if kind != "fssimrep":
        return PipelineModels()
    vectors = [_check_input(kind, m) for m in train]
    scaler = fit_scaler(np.vstack(vectors))
    scaled = np.vstack([apply_scaler(scaler, v) for v in vectors])
    pca = fit_pca(scaled, pca_dims)
    return PipelineModels(scaler=scaler, pca=pca)


def _check_kind(kind: str) -> None:
    if kind not in REPR_KINDS:
        raise DataError(f"unknown representation kind {kind!r}; expected one of {REPR_KINDS}")


def _check_input(kind: str, m: FeatureMatrix) -> np.ndarray:
    expected = REPR_INPUT_DIMS[kind]
    if m.dims != expected:
        raise DataError(
            f"{kind} input for {m.sound_id!r} must have {expected} dims, got {m.dims}"
        )
    if REPR_CLIP_LEVEL[kind] and m.n_frames != 1:
        raise DataError(
            f"{kind} input for {m.sound_id!r} must be clip-level (1 frame), "
            f"got {m.n_frames}"
        )
    return np.asarray(m.values[0] if REPR_CLIP_LEVEL[kind] else m.values, dtype=np.float64)


def build_representation(kind: str, m: FeatureMatrix, fitted: PipelineModels) -> np.ndarray:
    """Produce the fixed-length vector for one sound."""
    _check_kind(kind)
    _check_input(kind, m)
    if kind == "fssimrep":
        if fitted.scaler is None or fitted.pca is None:
            raise DataError("fssimrep requires fitted scaler and PCA models")
        scaled = apply_scaler(fitted.scaler, np.asarray(m.values[0], dtype=np.float64))
        return apply_pca(fitted.pca, scaled)
    if kind == "clap":
        return np.asarray(m.values[0], dtype=np.float64).copy()
    return aggregate_mean(m).values[0]


def save_pipeline(models: PipelineModels, out_dir: str | Path) -> None:
    """Persist fitted models (float64 .npy arrays plus a small JSON index)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = {"format": "broadsound-pipeline", "version": 1, "parts": []}
    if models.scaler is not None:
        np.save(out_dir / "scaler_bounds.npy",
                np.vstack([models.scaler.min, models.scaler.max]))
        index["parts"].append("scaler")
    if models.pca is not None:
        np.save(out_dir / "pca_mean.npy", models.pca.mean)
        np.save(out_dir / "pca_components.npy", models.pca.components)
        np.save(out_dir / "pca_variance.npy", models.pca.explained_variance)
        index["parts"].append("pca")
    (out_dir / "pipeline.json").write_text(
        json.dumps(index, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_pipeline(in_dir: str | Path) -> PipelineModels:
    in_dir = Path(in_dir)
    try:
        index = json.loads((in_dir / "pipeline.json").read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read pipeline index in {in_dir}: {exc}") from exc
    scaler = None
    pca = None
    if "scaler" in index.get("parts", []):
        bounds = np.load(in_dir / "scaler_bounds.npy")
        scaler = ScalerModel(min=bounds[0], max=bounds[1])
    if "pca" in index.get("parts", []):
        pca = PcaModel(
            mean=np.load(in_dir / "pca_mean.npy"),
            components=np.load(in_dir / "pca_components.npy"),
            explained_variance=np.load(in_dir / "pca_variance.npy"),
        )
    return PipelineModels(scaler=scaler, pca=pca)
