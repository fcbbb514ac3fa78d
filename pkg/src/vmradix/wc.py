"""Software write-combining: per-lane line-sized staging buffers.

Items headed for many output streams are first placed in one 64-byte buffer
per lane. A buffer that fills up is copied to its lane's destination cursor
as a single full-line burst, so the destination is never read and partial
line transfers are avoided. The buffers, destination cursors and fill
counters live in one contiguous allocation: for 256 lanes the whole working
set stays within a 32 KiB L1 budget, and consecutive 64-byte buffers spread
across cache sets instead of aliasing 4 KiB apart.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .items import LINE_BYTES, items_per_line

CACHE_SET_STRIDE = 4096  # set count x line size for an 8-way 32 KiB L1
L1_BUDGET_BYTES = 32 * 1024


@dataclass
class LayoutDiagnostics:
    lane_count: int
    max_per_class: int
    analytic_min: int

    @property
    def aliased(self) -> bool:
        return self.max_per_class > self.analytic_min


def layout_check(addresses, line_bytes: int = LINE_BYTES,
                 set_stride: int = CACHE_SET_STRIDE) -> LayoutDiagnostics:
    """Count buffer addresses sharing a cache-set congruence class.

    For a contiguous block of line-sized buffers the largest class has
    ceil(block/set_stride) members, the analytic minimum; anything above
    that means write positions alias the same sets.
    """
    addresses = np.asarray(addresses, dtype=np.int64)
    classes = (addresses % set_stride) // line_bytes
    max_per_class = int(np.bincount(classes).max()) if addresses.size else 0
    span = addresses.size * line_bytes
    analytic_min = -(-span // set_stride) if addresses.size else 0
    return LayoutDiagnostics(int(addresses.size), max_per_class, analytic_min)


class StagingBufferSet:
    """lane_count line buffers plus destination cursors and fill counts.

    Owned by a single worker; stage() appends one item to a lane's buffer
    and bursts the buffer to `dest` at the lane's cursor when it fills.
    A buffer is flushed exactly when its post-incremented staged count is a
    multiple of the line capacity, so fill stays below items_per_line
    between calls.
    """

    def __init__(self, lane_count: int, item_dtype):
        self.lane_count = lane_count
        self.item_dtype = np.dtype(item_dtype)
        self.items_per_line = items_per_line(self.item_dtype)
        line_area = lane_count * LINE_BYTES
        cursor_area = lane_count * 8
        fill_area = lane_count * 8
        raw = np.zeros(line_area + cursor_area + fill_area + LINE_BYTES,
                       dtype=np.uint8)
        offset = (-raw.ctypes.data) % LINE_BYTES
        self._block = raw[offset:offset + line_area + cursor_area + fill_area]
        self.lines = self._block[:line_area].view(self.item_dtype)
        self.dest_cursor = self._block[line_area:line_area + cursor_area].view(np.int64)
        self.fill = self._block[line_area + cursor_area:].view(np.int64)

    @property
    def working_set_bytes(self) -> int:
        return self._block.nbytes

    def buffer_addresses(self) -> np.ndarray:
        base = self.lines.ctypes.data
        return base + np.arange(self.lane_count, dtype=np.int64) * LINE_BYTES

    def layout_check(self) -> LayoutDiagnostics:
        return layout_check(self.buffer_addresses())

    def stage(self, lane: int, item, dest: np.ndarray) -> bool:
        """Append item to lane's buffer; returns True when a line was flushed."""
        return bool(_kernels.stage_one(self.lines, self.fill, self.dest_cursor,
                                       dest, lane, self.item_dtype.type(item),
                                       self.items_per_line))

    def drain(self, dest: np.ndarray, stats: np.ndarray | None = None):
        """Write out every partial buffer with plain stores; fills reset to 0."""
        if stats is None:
            stats = np.zeros(3, dtype=np.int64)
        _kernels.drain_lanes(self.lines, self.fill, self.dest_cursor, dest,
                             self.items_per_line, stats)


def flush_line(src: np.ndarray, src_index: int, dst: np.ndarray, dst_index: int):
    """Copy one full line of items from a staged buffer to the destination.

    Both positions must be line-aligned; unaligned final-pass head/tail data
    takes the plain-write path instead.
    """
    ipl = items_per_line(src.dtype)
    assert (src.ctypes.data + src_index * src.itemsize) % LINE_BYTES == 0
    assert (dst.ctypes.data + dst_index * dst.itemsize) % LINE_BYTES == 0
    _kernels.flush_line(src, src_index, dst, dst_index, ipl)


def make_staging(lane_count: int, item_dtype) -> StagingBufferSet:
    set_ = StagingBufferSet(lane_count, item_dtype)
    if lane_count <= 256:
        assert set_.working_set_bytes <= L1_BUDGET_BYTES
    return set_


def streaming_store_mode(requested: bool = True) -> str:
    """How full-line flushes hit memory.

    This runtime has no way to issue explicit non-temporal stores, so flushes
    are plain full-line copies; the mode is recorded in reports so throughput
    numbers can be interpreted. Correctness never depends on it.
    """
    if not requested:
        return "disabled"
    return "unavailable"
