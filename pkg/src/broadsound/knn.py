"""Exact k-nearest-neighbor classification and hyperparameter grid search.

Distances are computed against the full training matrix (no approximate
index). All tie situations are resolved deterministically:

* ties at the k-th neighbor distance keep the training point with the
  lower insertion index (stable sort order);
* vote ties go to the class with the smaller summed neighbor distance,
  then to the lexicographically smaller class code;
* inverse-distance weights are 1 / max(d, 1e-12), so a zero-distance
  neighbor dominates the vote.

Results are therefore independent of any internal parallelism and equal
to a naive full-scan reference.
"""

from __future__ import annotations

import itertools
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from broadsound import fvec
from broadsound.errors import DataError

METRICS = ("euclidean", "manhattan", "cosine")
WEIGHTINGS = ("uniform", "inverse_distance")
LABEL_LEVELS = ("second", "top")

INVERSE_DISTANCE_EPS = 1e-12

# default search space: small odd neighbor counts avoid most voting ties
DEFAULT_K_VALUES = tuple(range(1, 50, 2))

_MODEL_MAGIC = b"BSDK"
_MODEL_VERSION = 1
_MODEL_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True)
class KnnConfig:
    k: int
    metric: str = "euclidean"
    weighting: str = "uniform"

    def __post_init__(self):
        if self.k < 1:
            raise DataError(f"k must be >= 1, got {self.k}")
        if self.metric not in METRICS:
            raise DataError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        if self.weighting not in WEIGHTINGS:
            raise DataError(
                f"unknown weighting {self.weighting!r}; expected one of {WEIGHTINGS}"
            )

    def to_json(self) -> dict:
        return {"k": self.k, "metric": self.metric, "weighting": self.weighting}

    @classmethod
    def from_json(cls, doc: dict) -> "KnnConfig":
        return cls(k=int(doc["k"]), metric=doc["metric"], weighting=doc["weighting"])


def distance(metric: str, a: np.ndarray, b: np.ndarray) -> float:
    """Pairwise distance between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"distance needs equal-length vectors, got {a.shape} and {b.shape}")
    if metric == "euclidean":
        return float(np.sqrt(np.sum((a - b) ** 2)))
    if metric == "manhattan":
        return float(np.sum(np.abs(a - b)))
    if metric == "cosine":
        na = float(np.sqrt(np.sum(a * a)))
        nb = float(np.sqrt(np.sum(b * b)))
        if na == 0.0 or nb == 0.0:
            raise DataError("cosine distance is undefined for zero vectors")
        # half squared chord of the unit vectors == 1 - cos(a, b), but is
        # exactly 0 for identical inputs and never negative
        u = a / na - b / nb
        return float(np.sum(u * u)) / 2.0
    raise DataError(f"unknown metric {metric!r}; expected one of {METRICS}")


def pairwise_distances(metric: str, queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """(Q, N) distance matrix; same math as :func:`distance` per pair."""
    q = np.asarray(queries, dtype=np.float64)
    x = np.asarray(points, dtype=np.float64)
    if q.ndim != 2 or x.ndim != 2 or q.shape[1] != x.shape[1]:
        raise DataError(f"incompatible shapes {q.shape} and {x.shape}")
    if metric == "cosine":
        qn = np.sqrt(np.sum(q * q, axis=1))
        xn = np.sqrt(np.sum(x * x, axis=1))
        if np.any(qn == 0.0) or np.any(xn == 0.0):
            raise DataError("cosine distance is undefined for zero vectors")
        sim = (q @ x.T) / (qn[:, None] * xn[None, :])
        return np.maximum(0.0, 1.0 - sim)
    out = np.empty((q.shape[0], x.shape[0]), dtype=np.float64)
    for i in range(q.shape[0]):
        diff = x - q[i]
        if metric == "euclidean":
            out[i] = np.sqrt(np.sum(diff * diff, axis=1))
        elif metric == "manhattan":
            out[i] = np.sum(np.abs(diff), axis=1)
        else:
            raise DataError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return out


class KnnModel:
    """Frozen training matrix + labels + hyperparameter configuration."""

    def __init__(
        self,
        train_matrix: np.ndarray,
        train_labels: Sequence[str],
        config: KnnConfig,
        label_level: str = "second",
    ):
        matrix = np.asarray(train_matrix, dtype=np.float64)
        labels = list(train_labels)
        if matrix.ndim != 2 or matrix.shape[0] < 1:
            raise DataError("training matrix must be a non-empty 2-D array")
        if matrix.shape[0] != len(labels):
            raise DataError(
                f"{matrix.shape[0]} training rows but {len(labels)} labels"
            )
        if matrix.shape[0] < config.k:
            raise DataError(
                f"k={config.k} exceeds the {matrix.shape[0]} training points"
            )
        if label_level not in LABEL_LEVELS:
            raise DataError(f"label_level must be one of {LABEL_LEVELS}")
        self.train_matrix = matrix
        self.train_labels = labels
        self.config = config
        self.label_level = label_level
        # class index in lexicographic order; doubles as the final tie-break
        self.classes = sorted(set(labels))
        self._class_index = {c: i for i, c in enumerate(self.classes)}
        self._label_idx = np.array([self._class_index[c] for c in labels], dtype=np.intp)

    @property
    def n_train(self) -> int:
        return self.train_matrix.shape[0]

    @property
    def dims(self) -> int:
        return self.train_matrix.shape[1]

    def predict(self, query: np.ndarray) -> tuple[str, dict[str, float]]:
        """Classify one query vector; returns (code, per-class score map)."""
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dims,):
            raise DataError(f"query must be a {self.dims}-vector, got shape {query.shape}")
        picks, scores = self._predict_prepared(
            pairwise_distances(self.config.metric, query[None, :], self.train_matrix),
            None,
            self.config,
        )
        score_map = {c: float(scores[0, i]) for i, c in enumerate(self.classes)}
        return self.classes[picks[0]], score_map

    def predict_batch(self, queries: np.ndarray) -> list[str]:
        """Classify each row of an (Q, dims) array."""
        queries = np.asarray(queries, dtype=np.float64)
        dmat = pairwise_distances(self.config.metric, queries, self.train_matrix)
        picks, _ = self._predict_prepared(dmat, None, self.config)
        return [self.classes[i] for i in picks]

    def _predict_prepared(
        self,
        dmat: np.ndarray,
        order: np.ndarray | None,
        config: KnnConfig,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Vote given a distance matrix (and optionally its row-wise sort order)."""
        if order is None:
            order = np.argsort(dmat, axis=1, kind="stable")
        n_q = dmat.shape[0]
        neigh = order[:, : config.k]
        neigh_d = np.take_along_axis(dmat, neigh, axis=1)
        neigh_cls = self._label_idx[neigh]

        if config.weighting == "uniform":
            weights = np.ones_like(neigh_d)
        else:
            weights = 1.0 / np.maximum(neigh_d, INVERSE_DISTANCE_EPS)

        n_c = len(self.classes)
        rows = np.repeat(np.arange(n_q), config.k)
        scores = np.zeros((n_q, n_c), dtype=np.float64)
        np.add.at(scores, (rows, neigh_cls.ravel()), weights.ravel())
        dist_sums = np.zeros((n_q, n_c), dtype=np.float64)
        np.add.at(dist_sums, (rows, neigh_cls.ravel()), neigh_d.ravel())

        # argmax score; ties by smaller summed distance, then class order
        top = scores.max(axis=1, keepdims=True)
        tied = scores == top
        sums_masked = np.where(tied, dist_sums, np.inf)
        best_sum = sums_masked.min(axis=1, keepdims=True)
        picks = (tied & (sums_masked == best_sum)).argmax(axis=1)
        return picks, scores


def save_model(model: KnnModel, path: str | Path) -> None:
    """Write the versioned model container (header JSON + FVEC train block).

    The embedded FVEC block stores the training matrix as float32; models
    built from wider data round-trip at that precision.
    """
    header = json.dumps(
        {
            "config": model.config.to_json(),
            "label_level": model.label_level,
            "labels": model.train_labels,
        },
        sort_keys=True,
    ).encode("utf-8")
    blob = _MODEL_HEADER.pack(_MODEL_MAGIC, _MODEL_VERSION, len(header))
    Path(path).write_bytes(blob + header + fvec.encode(model.train_matrix))


def load_model(path: str | Path) -> KnnModel:
    data = Path(path).read_bytes()
    if len(data) < _MODEL_HEADER.size:
        raise DataError(f"{path}: truncated model file")
    magic, version, header_len = _MODEL_HEADER.unpack_from(data)
    if magic != _MODEL_MAGIC:
        raise DataError(f"{path}: bad model magic {magic!r}")
    if version != _MODEL_VERSION:
        raise DataError(f"{path}: unsupported model version {version}")
    header_end = _MODEL_HEADER.size + header_len
    try:
        header = json.loads(data[_MODEL_HEADER.size:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt model header: {exc}") from exc
    matrix = fvec.decode(data[header_end:])
    return KnnModel(
        train_matrix=matrix,
        train_labels=header["labels"],
        config=KnnConfig.from_json(header["config"]),
        label_level=header["label_level"],
    )


@dataclass(frozen=True)
class GridRow:
    config: KnnConfig
    accuracy: float
    macro_f1: float


@dataclass(frozen=True)
class GridSearchReport:
    rows: list[GridRow]
    top100_spread: float = field(init=False)

    def __post_init__(self):
        if not self.rows:
            raise DataError("grid search produced no rows")
        head = [r.accuracy for r in self.rows[:100]]
        object.__setattr__(self, "top100_spread", max(head) - min(head))

    @property
    def best(self) -> KnnConfig:
        return self.rows[0].config

    def to_json(self) -> dict:
        return {
            "best": self.best.to_json(),
            "top100_spread": self.top100_spread,
            "rows": [
                {"config": r.config.to_json(), "accuracy": r.accuracy, "macro_f1": r.macro_f1}
                for r in self.rows
            ],
        }


def _accuracy_and_macro_f1(preds: Sequence[str], truths: Sequence[str]) -> tuple[float, float]:
    from broadsound.evaluation import plain_metrics

    m = plain_metrics(preds, truths)
    return m["accuracy"], m["macro_f1"]


def grid_search(
    train_x: np.ndarray,
    train_labels: Sequence[str],
    eval_x: np.ndarray,
    eval_labels: Sequence[str],
    k_values: Sequence[int] = DEFAULT_K_VALUES,
    metrics: Sequence[str] = METRICS,
    weightings: Sequence[str] = WEIGHTINGS,
    label_level: str = "second",
) -> GridSearchReport:
    """Score every configuration on the eval set.

    Rows come back sorted by accuracy (descending; ties by macro-F1 then
    enumeration order of the space), so ``rows[0]`` is the selected
    configuration.
    """
    if len(eval_labels) == 0 or len(train_labels) == 0:
        raise DataError("grid search needs non-empty train and eval sets")
    if not (len(k_values) and len(metrics) and len(weightings)):
        raise DataError("empty search space")
    max_k = max(k_values)

    results: list[GridRow] = []
    for metric in metrics:
        base = KnnModel(
            train_x, train_labels, KnnConfig(k=max_k, metric=metric), label_level
        )
        dmat = pairwise_distances(metric, np.asarray(eval_x, dtype=np.float64),
                                  base.train_matrix)
        order = np.argsort(dmat, axis=1, kind="stable")
        for k, weighting in itertools.product(k_values, weightings):
            config = KnnConfig(k=k, metric=metric, weighting=weighting)
            picks, _ = base._predict_prepared(dmat, order, config)
            preds = [base.classes[i] for i in picks]
            acc, f1 = _accuracy_and_macro_f1(preds, list(eval_labels))
            results.append(GridRow(config=config, accuracy=acc, macro_f1=f1))

    space_order = {
        (m, k, w): i
        for i, (m, k, w) in enumerate(itertools.product(metrics, k_values, weightings))
    }
    results.sort(
        key=lambda r: (
            -r.accuracy,
            -r.macro_f1,
            space_order[(r.config.metric, r.config.k, r.config.weighting)],
        )
    )
    return GridSearchReport(rows=results)


def grid_search_cv(
    train_x: np.ndarray,
    train_labels: Sequence[str],
    k_values: Sequence[int] = DEFAULT_K_VALUES,
    metrics: Sequence[str] = METRICS,
    weightings: Sequence[str] = WEIGHTINGS,
    folds: int = 5,
    seed: int = 0,
    label_level: str = "second",
) -> GridSearchReport:
    """Stratified k-fold grid search on the train split alone.

    Honest model selection for when the held-out eval split must stay
    untouched; reports fold-averaged accuracy and macro-F1.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    labels = list(train_labels)
    if folds < 2:
        raise DataError("cross-validation needs at least 2 folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=np.intp)
    for code in sorted(set(labels)):
        idxs = [i for i, lab in enumerate(labels) if lab == code]
        if len(idxs) < folds:
            raise DataError(f"class {code!r} has {len(idxs)} records, fewer than {folds} folds")
        order = rng.permutation(len(idxs))
        for pos, j in enumerate(order):
            fold_of[idxs[j]] = pos % folds

    accum: dict[tuple, list[tuple[float, float]]] = {}
    for f in range(folds):
        hold = fold_of == f
        rep = grid_search(
            train_x[~hold],
            [lab for lab, h in zip(labels, hold) if not h],
            train_x[hold],
            [lab for lab, h in zip(labels, hold) if h],
            k_values,
            metrics,
            weightings,
            label_level,
        )
        for row in rep.rows:
            key = (row.config.metric, row.config.k, row.config.weighting)
            accum.setdefault(key, []).append((row.accuracy, row.macro_f1))

    space_order = {
        (m, k, w): i
        for i, (m, k, w) in enumerate(itertools.product(metrics, k_values, weightings))
    }
    rows = [
        GridRow(
            config=KnnConfig(k=k, metric=m, weighting=w),
            accuracy=float(np.mean([a for a, _ in vals])),
            macro_f1=float(np.mean([f1 for _, f1 in vals])),
        )
        for (m, k, w), vals in accum.items()
    ]
    rows.sort(
        key=lambda r: (
            -r.accuracy,
            -r.macro_f1,
            space_order[(r.config.metric, r.config.k, r.config.weighting)],
        )
    )
    return GridSearchReport(rows=rows)
