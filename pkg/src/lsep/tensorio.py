"""Binary tensor container ("FTEN") used for every dense artifact on disk.

Layout, little-endian throughout, no padding:

    magic   4 bytes  b"FTEN"
    version u16      1
    dtype   u8       0 (float32)
    ndim    u8
    dims    ndim x u64
    payload product(dims) x f32, row-major

Payloads are validated eagerly: a tensor containing NaN or Inf is rejected
at the I/O boundary so downstream numerics never see one.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import LengthError, FormatError, ValidationError

MAGIC = b"FTEN"
VERSION = 1
DTYPE_F32 = 0

_HEADER = struct.Struct("<4sHBB")


@dataclass(frozen=True)
class Tensor:
    """A finite float32 array with explicit dims.

    `data` is kept C-contiguous float32; `dims` mirrors `data.shape` and is
    what gets serialized.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim == 0:  # checked before ascontiguousarray, which promotes 0-d to 1-d
            raise ValidationError("tensor dims must be non-empty (ndim >= 1)")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("tensor contains NaN or Inf")
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape


def write_tensor(t: Tensor | np.ndarray, path: str | Path) -> None:
    """Serialize `t` to `path`; byte-exact round-trip with read_tensor."""
    if not isinstance(t, Tensor):
        t = Tensor(np.asarray(t))
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, DTYPE_F32, t.data.ndim))
            fh.write(struct.pack(f"<{t.data.ndim}Q", *t.dims))
            fh.write(t.data.tobytes(order="C"))
    except OSError as exc:
        raise FormatError(f"cannot write tensor to {path}: {exc}") from exc


def _read_header(fh, path: Path) -> tuple[int, ...]:
    head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dtype, ndim = _HEADER.unpack(head)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    if ndim == 0:
        raise FormatError(f"{path}: zero-dimensional tensor")
    raw_dims = fh.read(8 * ndim)
    if len(raw_dims) < 8 * ndim:
        raise FormatError(f"{path}: truncated dims")
    return struct.unpack(f"<{ndim}Q", raw_dims)


def read_tensor(path: str | Path) -> Tensor:
    """Read and validate a tensor file written by write_tensor."""
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"{path}: no such file")
    with open(path, "rb") as fh:
        dims = _read_header(fh, path)
        count = int(np.prod(dims, dtype=np.int64))
        payload = fh.read()
    if len(payload) != 4 * count:
        raise LengthError(
            f"{path}: dims {list(dims)} declare {count} elements "
            f"but payload holds {len(payload) // 4}"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{path}: payload contains NaN or Inf")
    return Tensor(arr)


def validate_tensor_header(path: str | Path) -> tuple[int, ...]:
    """Cheap integrity check: header sane and file size matches dims.

    Used by manifest loading so that broken references surface before any
    heavy computation; returns the declared dims without loading data.
    """
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"{path}: no such file")
    with open(path, "rb") as fh:
        dims = _read_header(fh, path)
    count = int(np.prod(dims, dtype=np.int64))
    expected = _HEADER.size + 8 * len(dims) + 4 * count
    actual = path.stat().st_size
    if actual != expected:
        raise LengthError(f"{path}: file is {actual} bytes, header implies {expected}")
    return dims
