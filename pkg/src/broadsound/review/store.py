"""Append-only annotation journal with last-write-wins reads.

Each appended record becomes one JSON line, fsynced before the write is
acknowledged, so every acknowledged annotation survives a hard kill.
Replaying the journal is deterministic; the latest record per
(sound_id, reviewer) pair wins, ordered by timestamp then revision.
The file is human-inspectable and two journals can be merged by
concatenation.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from broadsound.dataset import CONFIDENCE_LEVELS
from broadsound.errors import DataError, StoreCorruptError

ERROR_CATEGORIES = (
    "acoustic_ambiguity",
    "between_classes_diff_top",
    "between_classes_same_top",
    "common_source",
    "prominence_one_source",
    "single_source_evolution",
    "low_quality",
    "uncommon_other",
)


@dataclass(frozen=True)
class ErrorAnnotation:
    sound_id: str
    category: str
    reviewer: str
    note: str | None = None
    timestamp: float = 0.0
    revision: int = 0

    def to_json(self) -> dict:
        doc = {
            "kind": "error",
            "rev": self.revision,
            "sound_id": self.sound_id,
            "category": self.category,
            "reviewer": self.reviewer,
            "ts": self.timestamp,
        }
        if self.note is not None:
            doc["note"] = self.note
        return doc


@dataclass(frozen=True)
class ClassAnnotation:
    sound_id: str
    class_code: str
    confidence: str
    annotator: str
    timestamp: float = 0.0
    revision: int = 0

    def to_json(self) -> dict:
        return {
            "kind": "class",
            "rev": self.revision,
            "sound_id": self.sound_id,
            "class_code": self.class_code,
            "confidence": self.confidence,
            "annotator": self.annotator,
            "ts": self.timestamp,
        }


def _parse_record(doc: dict):
    kind = doc.get("kind")
    if kind == "error":
        ann = ErrorAnnotation(
            sound_id=str(doc["sound_id"]),
            category=str(doc["category"]),
            reviewer=str(doc["reviewer"]),
            note=doc.get("note"),
            timestamp=float(doc["ts"]),
            revision=int(doc["rev"]),
        )
        if ann.category not in ERROR_CATEGORIES:
            raise ValueError(f"invalid category {ann.category!r}")
        return ann
    if kind == "class":
        ann = ClassAnnotation(
            sound_id=str(doc["sound_id"]),
            class_code=str(doc["class_code"]),
            confidence=str(doc["confidence"]),
            annotator=str(doc["annotator"]),
            timestamp=float(doc["ts"]),
            revision=int(doc["rev"]),
        )
        if ann.confidence not in CONFIDENCE_LEVELS:
            raise ValueError(f"invalid confidence {ann.confidence!r}")
        return ann
    raise ValueError(f"unknown record kind {kind!r}")


class AnnotationStore:
    """Journal-backed store; appends are serialized, reads are cheap."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        # latest annotation per (sound_id, reviewer/annotator)
        self._errors: dict[tuple[str, str], ErrorAnnotation] = {}
        self._classes: dict[tuple[str, str], ClassAnnotation] = {}
        self._next_rev = 1
        self._replay()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _replay(self) -> None:
        if not self.path.exists():
            return
        with open(self.path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    ann = _parse_record(json.loads(line))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise StoreCorruptError(
                        f"{self.path}:{line_no}: corrupt journal record: {exc}",
                        line_no=line_no,
                    ) from exc
                self._apply(ann)
                self._next_rev = max(self._next_rev, ann.revision + 1)

    def _apply(self, ann) -> None:
        if isinstance(ann, ErrorAnnotation):
            table, key = self._errors, (ann.sound_id, ann.reviewer)
        else:
            table, key = self._classes, (ann.sound_id, ann.annotator)
        prev = table.get(key)
        if prev is None or (ann.timestamp, ann.revision) >= (prev.timestamp, prev.revision):
            table[key] = ann

    def _append(self, ann) -> int:
        self._fh.write(json.dumps(ann.to_json(), sort_keys=True) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._apply(ann)
        self._next_rev += 1
        return ann.revision

    def record_error(
        self, sound_id: str, category: str, reviewer: str, note: str | None = None
    ) -> int:
        """Append an error-category judgment; returns its revision id."""
        if category not in ERROR_CATEGORIES:
            raise DataError(
                f"invalid category {category!r}; expected one of {ERROR_CATEGORIES}"
            )
        if not reviewer:
            raise DataError("reviewer must be non-empty")
        with self._lock:
            ann = ErrorAnnotation(
                sound_id=sound_id,
                category=category,
                reviewer=reviewer,
                note=note,
                timestamp=time.time(),
                revision=self._next_rev,
            )
            return self._append(ann)

    def record_class(
        self, sound_id: str, class_code: str, confidence: str, annotator: str
    ) -> int:
        """Append a class judgment with its confidence; returns the revision id."""
        if confidence not in CONFIDENCE_LEVELS:
            raise DataError(
                f"invalid confidence {confidence!r}; expected one of {CONFIDENCE_LEVELS}"
            )
        if not annotator:
            raise DataError("annotator must be non-empty")
        with self._lock:
            ann = ClassAnnotation(
                sound_id=sound_id,
                class_code=class_code,
                confidence=confidence,
                annotator=annotator,
                timestamp=time.time(),
                revision=self._next_rev,
            )
            return self._append(ann)

    def latest_error(self, sound_id: str) -> ErrorAnnotation | None:
        """Most recent error annotation for a sound across reviewers."""
        candidates = [a for (sid, _), a in self._errors.items() if sid == sound_id]
        if not candidates:
            return None
        return max(candidates, key=lambda a: (a.timestamp, a.revision))

    def latest_class(self, sound_id: str) -> ClassAnnotation | None:
        candidates = [a for (sid, _), a in self._classes.items() if sid == sound_id]
        if not candidates:
            return None
        return max(candidates, key=lambda a: (a.timestamp, a.revision))

    def class_annotations_for(self, sound_id: str) -> list[ClassAnnotation]:
        return sorted(
            (a for (sid, _), a in self._classes.items() if sid == sound_id),
            key=lambda a: (a.timestamp, a.revision),
        )

    def error_report(self) -> dict:
        """Per-category counts of the latest annotations.

        With multiple reviewers a sound counts once under its majority
        category (ties resolved by the most recent annotation); the
        per-reviewer breakdown is reported alongside. Total equals the
        number of distinct annotated sounds.
        """
        by_sound: dict[str, list[ErrorAnnotation]] = {}
        for (sound_id, _), ann in self._errors.items():
            by_sound.setdefault(sound_id, []).append(ann)

        categories = {c: 0 for c in ERROR_CATEGORIES}
        for anns in by_sound.values():
            tally: dict[str, int] = {}
            for a in anns:
                tally[a.category] = tally.get(a.category, 0) + 1
            top = max(tally.values())
            tied = {c for c, n in tally.items() if n == top}
            winner = max(
                (a for a in anns if a.category in tied),
                key=lambda a: (a.timestamp, a.revision),
            ).category
            categories[winner] += 1

        per_reviewer: dict[str, dict[str, int]] = {}
        for (_, reviewer), ann in self._errors.items():
            bucket = per_reviewer.setdefault(reviewer, {c: 0 for c in ERROR_CATEGORIES})
            bucket[ann.category] += 1

        return {
            "total": len(by_sound),
            "categories": categories,
            "per_reviewer": per_reviewer,
        }

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.flush()
                os.fsync(self._fh.fileno())
                self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
