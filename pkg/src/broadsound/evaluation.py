"""Classification metrics, confusion matrices, and hierarchical analyses.

Macro averaging runs over the classes present in the truth labels; a
class with zero predicted positives contributes precision 0 (never NaN),
which keeps aggregates stable on sparse eval sets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from broadsound.dataset import DatasetManifest
from broadsound.errors import DataError
from broadsound.knn import KnnModel
from broadsound.taxonomy import Level, Taxonomy


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows = true class, columns = predicted class, in ``class_order``."""

    class_order: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        c = len(self.class_order)
        if counts.shape != (c, c):
            raise DataError(f"confusion counts must be {c}x{c}, got {counts.shape}")
        if np.any(counts < 0):
            raise DataError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def to_csv(self) -> str:
        """CSV with the class codes as header row and leading column."""
        lines = ["," + ",".join(self.class_order)]
        for code, row in zip(self.class_order, self.counts):
            lines.append(code + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def confusion_from_labels(
    preds: Sequence[str], truths: Sequence[str], class_order: Sequence[str]
) -> ConfusionMatrix:
    if len(preds) != len(truths):
        raise DataError(f"{len(preds)} predictions vs {len(truths)} truths")
    index = {c: i for i, c in enumerate(class_order)}
    counts = np.zeros((len(class_order), len(class_order)), dtype=np.int64)
    for p, t in zip(preds, truths):
        try:
            counts[index[t], index[p]] += 1
        except KeyError as exc:
            raise DataError(f"label {exc.args[0]!r} not in class order") from None
    return ConfusionMatrix(class_order=tuple(class_order), counts=counts)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvaluationReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    # support-weighted alternatives, for when the eval set is imbalanced
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class: dict[str, ClassMetrics]
    confusion: ConfusionMatrix
    misclassified: list[tuple[str, str, str]]  # (sound_id, true, predicted)

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "per_class": {
                c: {"precision": m.precision, "recall": m.recall, "f1": m.f1,
                    "support": m.support}
                for c, m in self.per_class.items()
            },
            "class_order": list(self.confusion.class_order),
            "confusion": self.confusion.counts.tolist(),
            "misclassified": [
                {"sound_id": s, "true_code": t, "predicted_code": p}
                for s, t, p in self.misclassified
            ],
        }


def _metrics_from_confusion(cm: ConfusionMatrix) -> tuple[dict[str, ClassMetrics], dict]:
    counts = cm.counts
    tp = np.diag(counts).astype(np.float64)
    col = counts.sum(axis=0).astype(np.float64)
    row = counts.sum(axis=1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(col > 0, tp / col, 0.0)
        recall = np.where(row > 0, tp / row, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / pr, 0.0)
    per_class = {
        code: ClassMetrics(
            precision=float(precision[i]),
            recall=float(recall[i]),
            f1=float(f1[i]),
            support=int(row[i]),
        )
        for i, code in enumerate(cm.class_order)
    }
    present = row > 0
    if not np.any(present):
        raise DataError("cannot evaluate an empty label sequence")
    weights = row[present] / row[present].sum()
    macro = {
        "accuracy": cm.trace / cm.total,
        "macro_precision": float(precision[present].mean()),
        "macro_recall": float(recall[present].mean()),
        "macro_f1": float(f1[present].mean()),
        "weighted_precision": float(precision[present] @ weights),
        "weighted_recall": float(recall[present] @ weights),
        "weighted_f1": float(f1[present] @ weights),
    }
    return per_class, macro


def plain_metrics(preds: Sequence[str], truths: Sequence[str]) -> dict:
    """Accuracy and macro metrics over plain label sequences (no taxonomy)."""
    order = sorted(set(truths) | set(preds))
    _, macro = _metrics_from_confusion(confusion_from_labels(preds, truths, order))
    return macro


def evaluate(
    preds: Sequence[str],
    truths: Sequence[str],
    taxonomy: Taxonomy,
    level: Level,
    sound_ids: Sequence[str] | None = None,
) -> EvaluationReport:
    """Full report for one prediction run at one taxonomy level."""
    if len(preds) != len(truths):
        raise DataError(f"{len(preds)} predictions vs {len(truths)} truths")
    taxonomy.validate_labels(truths, level)
    taxonomy.validate_labels(preds, level)
    if sound_ids is None:
        sound_ids = [str(i) for i in range(len(truths))]
    elif len(sound_ids) != len(truths):
        raise DataError("sound_ids length does not match labels")

    cm = confusion_from_labels(preds, truths, taxonomy.codes(level))
    per_class, macro = _metrics_from_confusion(cm)
    misclassified = [
        (sid, t, p) for sid, t, p in zip(sound_ids, truths, preds) if t != p
    ]
    return EvaluationReport(
        accuracy=macro["accuracy"],
        macro_precision=macro["macro_precision"],
        macro_recall=macro["macro_recall"],
        macro_f1=macro["macro_f1"],
        weighted_precision=macro["weighted_precision"],
        weighted_recall=macro["weighted_recall"],
        weighted_f1=macro["weighted_f1"],
        per_class=per_class,
        confusion=cm,
        misclassified=misclassified,
    )


@dataclass(frozen=True)
class ConsistencyReport:
    """How often the dedicated top-level model rescues second-level errors."""

    n_second_errors: int
    n_recovered_at_top: int
    recovered_fraction: float | None  # None when there are no errors
    collapsed_second_accuracy: float

    def to_json(self) -> dict:
        return {
            "n_second_errors": self.n_second_errors,
            "n_recovered_at_top": self.n_recovered_at_top,
            "recovered_fraction": self.recovered_fraction,
            "collapsed_second_accuracy": self.collapsed_second_accuracy,
        }


def hierarchical_consistency(
    second_preds: Sequence[str],
    top_preds: Sequence[str],
    truths: Sequence[str],
    taxonomy: Taxonomy,
) -> ConsistencyReport:
    """Among second-level misclassifications, the fraction whose dedicated
    top-level prediction matches the collapsed true label."""
    if not (len(second_preds) == len(top_preds) == len(truths)):
        raise DataError(
            f"misaligned inputs: {len(second_preds)}/{len(top_preds)}/{len(truths)}"
        )
    true_tops = taxonomy.collapse_labels(truths)
    collapsed_preds = taxonomy.collapse_labels(second_preds)

    errors = 0
    recovered = 0
    collapsed_correct = 0
    for sp, tp, t, tt, cp in zip(second_preds, top_preds, truths, true_tops, collapsed_preds):
        if cp == tt:
            collapsed_correct += 1
        if sp != t:
            errors += 1
            if tp == tt:
                recovered += 1
    return ConsistencyReport(
        n_second_errors=errors,
        n_recovered_at_top=recovered,
        recovered_fraction=(recovered / errors) if errors else None,
        collapsed_second_accuracy=collapsed_correct / len(truths),
    )


@dataclass(frozen=True)
class LevelComparison:
    second_accuracy: float
    collapsed_top_accuracy: float
    dedicated_top_accuracy: float

    def to_json(self) -> dict:
        return {
            "second_accuracy": self.second_accuracy,
            "collapsed_top_accuracy": self.collapsed_top_accuracy,
            "dedicated_top_accuracy": self.dedicated_top_accuracy,
        }


def collapsed_vs_dedicated(
    second_model: KnnModel,
    top_model: KnnModel,
    eval_x: np.ndarray,
    eval_second_labels: Sequence[str],
    taxonomy: Taxonomy,
) -> LevelComparison:
    """Compare collapsing second-level predictions against a dedicated
    top-level model trained on the same split."""
    if second_model.label_level != "second" or top_model.label_level != "top":
        raise DataError("expected a second-level and a top-level model")
    if (
        second_model.n_train != top_model.n_train
        or taxonomy.collapse_labels(second_model.train_labels) != top_model.train_labels
    ):
        raise DataError("models were not trained on the same split")

    second_preds = second_model.predict_batch(eval_x)
    top_preds = top_model.predict_batch(eval_x)
    true_tops = taxonomy.collapse_labels(list(eval_second_labels))
    n = len(eval_second_labels)

    second_acc = sum(p == t for p, t in zip(second_preds, eval_second_labels)) / n
    collapsed_acc = sum(
        p == t for p, t in zip(taxonomy.collapse_labels(second_preds), true_tops)
    ) / n
    dedicated_acc = sum(p == t for p, t in zip(top_preds, true_tops)) / n
    # a correct second-level prediction is always correct once collapsed
    assert collapsed_acc >= second_acc
    return LevelComparison(
        second_accuracy=second_acc,
        collapsed_top_accuracy=collapsed_acc,
        dedicated_top_accuracy=dedicated_acc,
    )


def export_misclassifications(
    report: EvaluationReport | Sequence[tuple[str, str, str]],
    manifest: DatasetManifest | None = None,
    sample: int | str = "all",
    seed: int = 0,
) -> list[dict]:
    """Build the human review queue from a report's misclassified list.

    Accepts a full report or a bare (sound_id, true, predicted) sequence.
    ``sample`` is either ``"all"`` or a sample size drawn without
    replacement with a seeded generator (queue order is preserved).
    """
    misclassified = (
        report.misclassified if isinstance(report, EvaluationReport) else list(report)
    )
    audio_paths: dict[str, str | None] = {}
    if manifest is not None:
        audio_paths = {r.sound_id: r.audio_path for r in manifest.records}
    entries = [
        {
            "sound_id": sid,
            "true_code": t,
            "predicted_code": p,
            "audio_path": audio_paths.get(sid),
        }
        for sid, t, p in misclassified
    ]
    if sample == "all":
        return entries
    n = int(sample)
    if n > len(entries):
        raise DataError(f"requested sample of {n} but only {len(entries)} errors exist")
    rng = np.random.default_rng(seed)
    keep = sorted(rng.choice(len(entries), size=n, replace=False))
    return [entries[i] for i in keep]


def write_review_queue(entries: Sequence[dict], path: str | Path) -> None:
    lines = [json.dumps(e, sort_keys=True) for e in entries]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_review_queue(path: str | Path) -> list[dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read review queue {path}: {exc}") from exc
    entries = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        if "sound_id" not in doc or "true_code" not in doc or "predicted_code" not in doc:
            raise DataError(f"{path}:{line_no}: incomplete queue entry")
        entries.append(doc)
    return entries
