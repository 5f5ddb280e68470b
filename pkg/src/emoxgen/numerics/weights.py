"""``EMOW1`` weight files.

Layout: the 5 magic bytes ``EMOW1`` followed by entries until end of file.
Each entry is

    u32  name length (little endian)
    ...  UTF-8 name
    u8   dtype tag (0 = float32)
    u8   ndim
    u32  dims[ndim] (little endian)
    ...  row-major little-endian payload
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import WeightFormatError

MAGIC = b"EMOW1"
_DTYPES = {0: np.dtype("<f4")}


def save_weights(path, arrays):
    """Write ``{name: array}`` to ``path`` in insertion order."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for name, arr in arrays.items():
            arr = np.asarray(arr)
            raw = name.encode("utf-8")
            if arr.ndim > 255:
                raise WeightFormatError(f"{name}: too many dimensions")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<BB", 0, arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_weights(path):
    """Read an ``EMOW1`` file into ``{name: float32 array}``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise WeightFormatError(f"{path}: bad magic, not an EMOW1 file")
    pos, out = len(MAGIC), {}

    def take(n):
        nonlocal pos
        if pos + n > len(blob):
            raise WeightFormatError(f"{path}: truncated entry at byte {pos}")
        chunk = blob[pos : pos + n]
        pos += n
        return chunk

    while pos < len(blob):
        (nlen,) = struct.unpack("<I", take(4))
        name = take(nlen).decode("utf-8")
        tag, ndim = struct.unpack("<BB", take(2))
        if tag not in _DTYPES:
            raise WeightFormatError(f"{path}: unknown dtype tag {tag} for {name}")
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim))
        dt = _DTYPES[tag]
        count = int(np.prod(dims)) if ndim else 1
        arr = np.frombuffer(take(count * dt.itemsize), dtype=dt).reshape(dims)
        if name in out:
            raise WeightFormatError(f"{path}: duplicate entry {name}")
        out[name] = arr.astype(np.float32)
    return out
