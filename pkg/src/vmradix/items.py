"""Item representation: a 32-bit key, optionally fused with a 32-bit payload.

Keys-only inputs are plain uint32 arrays. Key-value inputs are uint64 arrays
holding one record each: key in the low 32 bits, value in the high 32 bits,
so the two halves are adjacent in memory (little-endian: key bytes first) and
digit extraction on the record sees exactly the key bytes.
"""

import numpy as np

LINE_BYTES = 64

KEY_DTYPE = np.uint32
RECORD_DTYPE = np.uint64

_KEY_MASK = np.uint64(0xFFFFFFFF)


def items_per_line(dtype) -> int:
    size = np.dtype(dtype).itemsize
    if LINE_BYTES % size != 0:
        raise ValueError(f"item size {size} does not divide the {LINE_BYTES}-byte line")
    return LINE_BYTES // size


def fuse_records(keys: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Pack parallel key/value arrays into fused 64-bit records."""
    if keys.shape != values.shape:
        raise ValueError("keys and values must have equal length")
    return keys.astype(np.uint64) | (values.astype(np.uint64) << np.uint64(32))


def split_records(records: np.ndarray):
    """Unpack fused records into (keys, values)."""
    keys = (records & _KEY_MASK).astype(np.uint32)
    values = (records >> np.uint64(32)).astype(np.uint32)
    return keys, values


def keys_of(items: np.ndarray) -> np.ndarray:
    """Key field of an item array, whichever representation it uses."""
    if items.dtype == RECORD_DTYPE:
        return (items & _KEY_MASK).astype(np.uint32)
    if items.dtype == KEY_DTYPE:
        return items
    raise ValueError(f"unsupported item dtype {items.dtype}")


def aligned_empty(n: int, dtype) -> np.ndarray:
    """Uninitialized array whose first element sits on a 64-byte boundary.

    Full-line burst copies require line-aligned destinations; numpy's default
    allocation alignment is weaker than that.
    """
    dtype = np.dtype(dtype)
    raw = np.empty(n * dtype.itemsize + LINE_BYTES, dtype=np.uint8)
    offset = (-raw.ctypes.data) % LINE_BYTES
    return raw[offset:offset + n * dtype.itemsize].view(dtype)
