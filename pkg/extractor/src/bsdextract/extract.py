"""Batch extraction: standardized WAV directory -> FVEC files + manifest update."""

from __future__ import annotations

import json
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from bsdextract import fvec_io
from bsdextract.backends import resolve_backend
from bsdextract.specs import EXTRACTOR_SPECS

STANDARD_RATE = 44_100


class ExtractError(RuntimeError):
    pass


class DimsMismatch(ExtractError):
    """Backend emitted a shape other than its kind's expected geometry.

    Signals adapter misconfiguration; nothing is written."""


@dataclass
class ExtractResult:
    kind: str
    checkpoint_id: str
    written: list[str]


def read_standardized_wav(path: Path) -> np.ndarray:
    """Mono 44.1 kHz 16-bit PCM -> float32 samples in [-1, 1)."""
    try:
        with wave.open(str(path)) as wf:
            if wf.getnchannels() != 1 or wf.getframerate() != STANDARD_RATE \
                    or wf.getsampwidth() != 2:
                raise ExtractError(
                    f"{path.name}: expected standardized mono {STANDARD_RATE} Hz "
                    f"16-bit input, got {wf.getnchannels()}ch "
                    f"{wf.getframerate()} Hz {8 * wf.getsampwidth()}-bit"
                )
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise ExtractError(f"{path.name}: undecodable WAV: {exc}") from exc
    if not raw:
        raise ExtractError(f"{path.name}: zero-length audio")
    return np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0


def extract_directory(
    kind: str,
    in_dir: str | Path,
    out_dir: str | Path,
    manifest_path: str | Path | None = None,
) -> ExtractResult:
    """Embed every ``*.wav`` in ``in_dir`` (sound id = file stem).

    Writes ``out_dir/<sound_id>.fvec`` per file, a small
    ``extract_meta.json`` recording the checkpoint identifier, and adds
    ``kind`` to the manifest's feature_set_ids when a manifest is given.
    """
    if kind not in EXTRACTOR_SPECS:
        raise ExtractError(f"unknown kind {kind!r}; expected one of {sorted(EXTRACTOR_SPECS)}")
    spec = EXTRACTOR_SPECS[kind]
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    wavs = sorted(in_dir.glob("*.wav"))
    if not wavs:
        raise ExtractError(f"no .wav files in {in_dir}")

    if manifest_path is not None:
        known = _manifest_sound_ids(Path(manifest_path))
        missing = [p.stem for p in wavs if p.stem not in known]
        if missing:
            raise ExtractError(
                f"{len(missing)} sounds are not in the manifest "
                f"(first few: {missing[:5]}); add records before extracting"
            )

    backend = resolve_backend(kind)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in wavs:
        samples = read_standardized_wav(path)
        matrix = np.asarray(backend.embed(samples, STANDARD_RATE))
        if matrix.ndim == 1:
            matrix = matrix[None, :]
        if matrix.ndim != 2 or matrix.shape[1] != spec.dims or matrix.shape[0] < 1:
            raise DimsMismatch(
                f"{kind} backend produced shape {matrix.shape} for {path.name}, "
                f"expected (n, {spec.dims})"
            )
        if spec.clip_level and matrix.shape[0] != 1:
            raise DimsMismatch(
                f"{kind} is clip-level but backend produced {matrix.shape[0]} frames "
                f"for {path.name}"
            )
        if not np.all(np.isfinite(matrix)):
            raise ExtractError(f"{kind} backend produced non-finite values for {path.name}")
        fvec_io.write(out_dir / f"{path.stem}.fvec", matrix)
        written.append(path.stem)

    checkpoint = getattr(backend, "checkpoint_id", "unknown")
    (out_dir / "extract_meta.json").write_text(
        json.dumps(
            {"kind": kind, "checkpoint_id": checkpoint, "count": len(written)},
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    if manifest_path is not None:
        _add_feature_set(Path(manifest_path), kind)
    return ExtractResult(kind=kind, checkpoint_id=checkpoint, written=written)


# ---- manifest (JSON lines with a header record) -----------------------------


def _manifest_lines(path: Path) -> list[str]:
    try:
        return path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ExtractError(f"cannot read manifest {path}: {exc}") from exc


def _manifest_sound_ids(path: Path) -> set[str]:
    ids = set()
    for line in _manifest_lines(path):
        if not line.strip():
            continue
        doc = json.loads(line)
        if doc.get("kind") == "manifest-header":
            continue
        ids.add(str(doc["sound_id"]))
    return ids


def _add_feature_set(path: Path, kind: str) -> None:
    """Add ``kind`` to the header's feature_set_ids, leaving records untouched."""
    lines = _manifest_lines(path)
    if not lines:
        raise ExtractError(f"manifest {path} is empty")
    header = json.loads(lines[0])
    if header.get("kind") != "manifest-header":
        header = {"kind": "manifest-header", "taxonomy_version": "0", "feature_set_ids": []}
        lines.insert(0, "")
    sets = list(header.get("feature_set_ids", []))
    if kind not in sets:
        sets.append(kind)
    header["feature_set_ids"] = sets
    lines[0] = json.dumps(header, sort_keys=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
