"""Versioned binary checkpoint of named tensors.

Layout (all integers little-endian):

    magic    8 bytes  b"BEVFCKPT"
    version  uint32   currently 1
    count    uint64   number of named tensors
    per tensor:
        name_len uint32, name UTF-8 bytes
        rank     uint64
        dims     rank * uint64
        payload  prod(dims) * float32 (little-endian)

Payloads are always stored as 32-bit floats regardless of the compute
precision in use.
"""

import struct

import numpy as np

MAGIC = b"BEVFCKPT"
VERSION = 1


class CheckpointError(RuntimeError):
    """Malformed or truncated checkpoint file."""


def save_checkpoint(path, named_tensors):
    """Write a mapping of name -> array. Iteration order is preserved."""
    items = list(named_tensors.items())
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(items)))
        for name, arr in items:
            arr = getattr(arr, "data", arr)  # accept Values/Parameters directly
            arr = np.asarray(arr, dtype=np.float32)
            raw = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<Q", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<Q", d))
            f.write(arr.astype("<f4").tobytes(order="C"))


def load_checkpoint(path):
    """Read back a dict of name -> float32 array."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes")
    off = len(MAGIC)

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(blob):
            raise CheckpointError(f"{path}: truncated at offset {off}")
        vals = struct.unpack_from(fmt, blob, off)
        off += size
        return vals[0] if len(vals) == 1 else vals

    version = take("<I")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    count = take("<Q")
    out = {}
    for _ in range(count):
        name_len = take("<I")
        if off + name_len > len(blob):
            raise CheckpointError(f"{path}: truncated tensor name")
        name = blob[off : off + name_len].decode("utf-8")
        off += name_len
        rank = take("<Q")
        dims = tuple(take("<Q") for _ in range(rank)) if rank else ()
        n = int(np.prod(dims)) if dims else 1
        nbytes = 4 * n
        if off + nbytes > len(blob):
            raise CheckpointError(f"{path}: truncated payload for {name!r}")
        arr = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(dims)
        off += nbytes
        out[name] = arr.copy()
    if off != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - off} trailing bytes")
    return out
