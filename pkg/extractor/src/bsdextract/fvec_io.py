"""Writer for the FVEC v1 container.

Layout (little-endian): magic ``BSDF``, u32 version=1, u32 n, u32 d,
then n*d float32 values row-major. Kept independent of the classifier
package; the format itself is the interface.
"""

import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sIII")
MAGIC = b"BSDF"
VERSION = 1


def encode(values: np.ndarray) -> bytes:
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"FVEC payload must be a non-empty 2-D matrix, got {arr.shape}")
    n, d = arr.shape
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, VERSION, n, d) + payload


def write(path: str | Path, values: np.ndarray) -> None:
    Path(path).write_bytes(encode(values))
