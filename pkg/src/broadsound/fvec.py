"""FVEC v1: bit-exact binary container for per-sound feature matrices.

Layout (little-endian throughout):

    bytes 0..3   magic ``BSDF``
    bytes 4..7   u32 version (1)
    bytes 8..11  u32 n (frames)
    bytes 12..15 u32 d (dims)
    then n*d IEEE-754 float32 values, row-major

One file per sound per feature set; manifests reference them by path.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from broadsound.errors import DataError

MAGIC = b"BSDF"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def encode(values: np.ndarray) -> bytes:
    """Serialize an (n, d) matrix; values are cast to float32."""
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError(f"FVEC payload must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("FVEC payload contains non-finite values")
    n, d = arr.shape
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, VERSION, n, d) + payload


def decode(blob: bytes) -> np.ndarray:
    """Parse FVEC bytes into an (n, d) float32 matrix."""
    if len(blob) < _HEADER.size:
        raise DataError("FVEC data truncated: missing header")
    magic, version, n, d = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataError(f"bad FVEC magic {magic!r}")
    if version != VERSION:
        raise DataError(f"unsupported FVEC version {version}")
    if n < 1 or d < 1:
        raise DataError(f"invalid FVEC shape ({n}, {d})")
    expected = _HEADER.size + 4 * n * d
    if len(blob) != expected:
        raise DataError(
            f"FVEC data has {len(blob)} bytes, expected {expected} for shape ({n}, {d})"
        )
    flat = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return flat.reshape(n, d).copy()


def write(path: str | Path, values: np.ndarray) -> None:
    Path(path).write_bytes(encode(values))


def read(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read FVEC file {path}: {exc}") from exc
    try:
        return decode(blob)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc
