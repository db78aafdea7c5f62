"""Sound records, dataset manifests, train/eval splits, class statistics.

Manifest file format: UTF-8 JSON lines. The first line is a header record

    {"kind": "manifest-header", "taxonomy_version": "...", "feature_set_ids": [...]}

and every following line is one sound record

    {"sound_id": "...", "second_label": "...", "duration_s": 12.3,
     "split": "train"|"eval"|"unassigned", "title": "...", "tags": [...],
     "annotator_confidence": "low"|"medium"|"high", "audio_path": "rel/path.wav"}

Optional fields may be omitted. Audio and feature files are referenced by
path relative to the manifest's directory; feature files for set ``S`` live
at ``features/S/{sound_id}.fvec`` unless the header maps them elsewhere.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from broadsound import fvec
from broadsound.errors import DataError
from broadsound.taxonomy import Level, Taxonomy

MAX_DURATION_S = 30.0

CONFIDENCE_LEVELS = ("low", "medium", "high")


class Split(enum.Enum):
    TRAIN = "train"
    EVAL = "eval"
    UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class SoundRecord:
    sound_id: str
    second_label: str
    duration_s: float
    split: Split = Split.UNASSIGNED
    title: str | None = None
    tags: tuple[str, ...] | None = None
    annotator_confidence: str | None = None
    audio_path: str | None = None

    def to_json(self) -> dict:
        doc = {
            "sound_id": self.sound_id,
            "second_label": self.second_label,
            "duration_s": self.duration_s,
            "split": self.split.value,
        }
        if self.title is not None:
            doc["title"] = self.title
        if self.tags is not None:
            doc["tags"] = list(self.tags)
        if self.annotator_confidence is not None:
            doc["annotator_confidence"] = self.annotator_confidence
        if self.audio_path is not None:
            doc["audio_path"] = self.audio_path
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SoundRecord":
        try:
            return cls(
                sound_id=str(doc["sound_id"]),
                second_label=str(doc["second_label"]),
                duration_s=float(doc["duration_s"]),
                split=Split(doc.get("split", "unassigned")),
                title=doc.get("title"),
                tags=tuple(doc["tags"]) if doc.get("tags") is not None else None,
                annotator_confidence=doc.get("annotator_confidence"),
                audio_path=doc.get("audio_path"),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"malformed sound record {doc!r}: {exc}") from exc


@dataclass
class DatasetManifest:
    records: list[SoundRecord]
    taxonomy_version: str = "0"
    feature_set_ids: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self, sound_id: str) -> SoundRecord:
        for r in self.records:
            if r.sound_id == sound_id:
                return r
        raise DataError(f"unknown sound_id {sound_id!r}")

    def subset(self, split: Split) -> list[SoundRecord]:
        return [r for r in self.records if r.split is split]


def validate_manifest(manifest: DatasetManifest, taxonomy: Taxonomy) -> None:
    """Check id uniqueness, label validity, and duration bounds."""
    seen: set[str] = set()
    second = set(taxonomy.codes(Level.SECOND))
    for i, rec in enumerate(manifest.records):
        if rec.sound_id in seen:
            raise DataError(f"duplicate sound_id {rec.sound_id!r} (record {i})")
        seen.add(rec.sound_id)
        if rec.second_label not in second:
            raise DataError(
                f"record {rec.sound_id!r} has unknown second-level label "
                f"{rec.second_label!r}"
            )
        if not (0.0 <= rec.duration_s <= MAX_DURATION_S):
            raise DataError(
                f"record {rec.sound_id!r} has duration {rec.duration_s}s outside "
                f"[0, {MAX_DURATION_S}]"
            )
        if rec.annotator_confidence is not None and (
            rec.annotator_confidence not in CONFIDENCE_LEVELS
        ):
            raise DataError(
                f"record {rec.sound_id!r} has invalid confidence "
                f"{rec.annotator_confidence!r}"
            )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    lines = [
        json.dumps(
            {
                "kind": "manifest-header",
                "taxonomy_version": manifest.taxonomy_version,
                "feature_set_ids": manifest.feature_set_ids,
            },
            sort_keys=True,
        )
    ]
    lines.extend(json.dumps(r.to_json(), sort_keys=True) for r in manifest.records)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: str | Path, taxonomy: Taxonomy | None = None) -> DatasetManifest:
    """Load a manifest; validates against ``taxonomy`` when given."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    records: list[SoundRecord] = []
    header: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        if line_no == 1 and doc.get("kind") == "manifest-header":
            header = doc
            continue
        records.append(SoundRecord.from_json(doc))
    manifest = DatasetManifest(
        records=records,
        taxonomy_version=str(header.get("taxonomy_version", "0")),
        feature_set_ids=list(header.get("feature_set_ids", [])),
    )
    if taxonomy is not None:
        validate_manifest(manifest, taxonomy)
    return manifest


def make_split(
    manifest: DatasetManifest,
    taxonomy: Taxonomy,
    per_class: int,
    seed: int,
) -> DatasetManifest:
    """Mark exactly ``per_class`` eval records per second-level class.

    Sampling shuffles each class's records with one PCG64 generator seeded
    by ``seed`` (classes visited in sorted code order), so the assignment is
    reproducible. All non-selected records become train records.
    """
    if per_class < 0:
        raise DataError("per_class must be >= 0")
    by_class: dict[str, list[int]] = {c: [] for c in taxonomy.codes(Level.SECOND)}
    for idx, rec in enumerate(manifest.records):
        if rec.second_label not in by_class:
            raise DataError(f"record {rec.sound_id!r} label {rec.second_label!r} not in taxonomy")
        by_class[rec.second_label].append(idx)

    shortfalls = {
        code: per_class - len(idxs)
        for code, idxs in by_class.items()
        if len(idxs) < per_class
    }
    if shortfalls:
        detail = ", ".join(f"{c} (short {n})" for c, n in sorted(shortfalls.items()))
        raise DataError(f"not enough records for per_class={per_class}: {detail}")

    rng = np.random.default_rng(seed)
    eval_indices: set[int] = set()
    for code in sorted(by_class):
        idxs = by_class[code]
        order = rng.permutation(len(idxs))
        eval_indices.update(idxs[i] for i in order[:per_class])

    new_records = [
        replace(rec, split=Split.EVAL if idx in eval_indices else Split.TRAIN)
        for idx, rec in enumerate(manifest.records)
    ]
    return DatasetManifest(
        records=new_records,
        taxonomy_version=manifest.taxonomy_version,
        feature_set_ids=list(manifest.feature_set_ids),
    )


def class_distribution(
    manifest: DatasetManifest, taxonomy: Taxonomy, level: Level
) -> dict[str, int]:
    """Record counts per class code at the requested level (zeros included)."""
    counts = {code: 0 for code in taxonomy.codes(level)}
    for rec in manifest.records:
        code = rec.second_label if level is Level.SECOND else taxonomy.parent_of(rec.second_label)
        counts[code] += 1
    return counts


def feature_path(manifest_dir: str | Path, set_id: str, sound_id: str) -> Path:
    return Path(manifest_dir) / "features" / set_id / f"{sound_id}.fvec"


def load_features(
    manifest_dir: str | Path,
    records: Iterable[SoundRecord],
    set_id: str,
) -> Iterator[tuple[SoundRecord, np.ndarray]]:
    """Yield (record, feature matrix) pairs for one feature set."""
    for rec in records:
        yield rec, fvec.read(feature_path(manifest_dir, set_id, rec.sound_id))
