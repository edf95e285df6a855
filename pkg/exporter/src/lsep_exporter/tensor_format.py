"""Writer for the toolkit's binary tensor container, plus checksums.

Independent implementation of the wire format (magic "FTEN", u16 version 1,
u8 dtype 0 = f32 LE, u8 ndim, ndim x u64 LE dims, row-major f32 payload, no
padding) so exported files are a true cross-implementation round-trip
against the consumer's reader.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FTEN"
VERSION = 1
DTYPE_F32 = 0


class ExportError(RuntimeError):
    pass


def write_tensor(array: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim == 0:
        raise ExportError("tensors must have at least one dim")
    if not np.all(np.isfinite(arr)):
        raise ExportError(f"{path.name}: non-finite values in export")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sHBB", MAGIC, VERSION, DTYPE_F32, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes(order="C"))
    return path


def write_checksum(path: str | Path) -> Path:
    """SHA-256 sidecar (`<file>.sha256`) over the tensor file's bytes."""
    path = Path(path)
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    sidecar = path.with_name(path.name + ".sha256")
    sidecar.write_text(digest + "\n")
    return sidecar
