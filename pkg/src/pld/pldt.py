"""PLDT v1: the on-disk tensor format for frames, masks and distinction maps.

Layout, all little-endian:

    magic  4 bytes  b"PLDT"
    u32    version  (1)
    u32    ndim
    u32[ndim] dims
    f32[product(dims)] data, row-major

Readers reject anything that does not parse exactly; writers always emit
C-contiguous float32.
"""

import struct
from pathlib import Path

import numpy as np

MAGIC = b"PLDT"
VERSION = 1
_MAX_NDIM = 8


class PldtError(ValueError):
    """Raised when a file is not a well-formed PLDT v1 tensor."""


def write_tensor(path, array) -> None:
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim < 1 or arr.ndim > _MAX_NDIM:
        raise PldtError(f"unsupported ndim {arr.ndim} for {path}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise PldtError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 12:
        raise PldtError(f"{path}: truncated header")
    version, ndim = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise PldtError(f"{path}: unsupported version {version}")
    if ndim < 1 or ndim > _MAX_NDIM:
        raise PldtError(f"{path}: bad ndim {ndim}")
    header_end = 12 + 4 * ndim
    if len(raw) < header_end:
        raise PldtError(f"{path}: truncated dims")
    dims = struct.unpack_from(f"<{ndim}I", raw, 12)
    count = int(np.prod(dims, dtype=np.int64))
    if len(raw) != header_end + 4 * count:
        raise PldtError(
            f"{path}: payload is {len(raw) - header_end} bytes, expected {4 * count}"
        )
    data = np.frombuffer(raw, dtype="<f4", count=count, offset=header_end)
    return data.reshape(dims).astype(np.float32, copy=True)
