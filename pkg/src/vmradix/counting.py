"""Single-pass counting sort over pre-reserved lanes.

Instead of a histogram pass followed by a scatter pass, every lane is given
`stride` item slots of reserved address space up front and items are written
to lane cursors as they stream by, so the input is read exactly once. With
stride = n no lane can overflow; physical memory only materializes for pages
the cursors actually cross, keeping residency near n * item_size plus a
couple of pages per lane.
"""

import numpy as np

from . import _kernels, wc
from .errors import LaneOverflowError
from .items import aligned_empty, items_per_line
from .reservoir import ReservedRegion, reserve


def _round_up(value: int, granule: int) -> int:
    return (value + granule - 1) // granule * granule


class LaneSet:
    """2^lane_bits disjoint lanes inside one reserved region.

    Lane k occupies item slots [k*stride, (k+1)*stride); `next_cursor[k]`
    is its write position and lengths are derived from the cursors. Strides
    are rounded up so every lane base is line-aligned.
    """

    def __init__(self, lane_count: int, stride: int, item_dtype):
        self.item_dtype = np.dtype(item_dtype)
        ipl = items_per_line(self.item_dtype)
        self.lane_count = lane_count
        self.stride = _round_up(max(stride, ipl), ipl)
        self.lane_reserved_bytes = lane_count * self.stride * self.item_dtype.itemsize
        self.region: ReservedRegion = reserve(self.lane_reserved_bytes)
        self.items = self.region.view(self.item_dtype,
                                      count=lane_count * self.stride)
        self.bases = np.arange(lane_count, dtype=np.int64) * self.stride
        self.ends = self.bases + self.stride
        self.next_cursor = self.bases.copy()

    @property
    def lengths(self) -> np.ndarray:
        return self.next_cursor - self.bases

    @property
    def total_items(self) -> int:
        return int(self.lengths.sum())

    def lane(self, k: int) -> np.ndarray:
        return self.items[self.bases[k]:self.next_cursor[k]]

    def account_commits(self):
        """Fold the pages behind each lane's written prefix into the region model."""
        size = self.item_dtype.itemsize
        self.region.account_many(self.bases * size, self.lengths * size)

    def release(self):
        self.region.release()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.release()
        return False


def counting_sort(items, lane_bits: int, shift: int = 0,
                  stride: int | None = None, use_wc: bool = True,
                  item_dtype=None) -> LaneSet:
    """Partition items by lane index ((item >> shift) & (2^lane_bits - 1)).

    `items` may be an ndarray or any iterable (consumed exactly once).
    stride defaults to n, which cannot overflow; a smaller stride raises
    LaneOverflowError naming the lane as soon as it would spill.
    """
    if isinstance(items, np.ndarray):
        arr = items
    else:
        arr = np.fromiter(iter(items),
                          dtype=np.dtype(item_dtype or np.uint64))
    n = arr.shape[0]
    lane_count = 1 << lane_bits
    lanes = LaneSet(lane_count, stride if stride is not None else max(n, 1),
                    arr.dtype)
    mask = np.uint64(lane_count - 1)
    stats = np.zeros(3, dtype=np.int64)
    if n:
        if use_wc:
            staging = wc.make_staging(lane_count, arr.dtype)
            bad = _kernels.scatter_wc(arr, 0, n, np.uint64(shift), mask,
                                      lanes.items, lanes.next_cursor,
                                      lanes.ends, staging.lines, staging.fill,
                                      staging.items_per_line, stats)
            if bad >= 0:
                lanes.release()
                raise LaneOverflowError(int(bad))
            _kernels.drain_lanes(staging.lines, staging.fill,
                                 lanes.next_cursor, lanes.items,
                                 staging.items_per_line, stats)
        else:
            bad = _kernels.scatter_plain(arr, 0, n, np.uint64(shift), mask,
                                         lanes.items, lanes.next_cursor,
                                         lanes.ends, stats)
            if bad >= 0:
                lanes.release()
                raise LaneOverflowError(int(bad))
    lanes.account_commits()
    lanes.bytes_written = int(stats[0])
    return lanes


def concatenate(lanes: LaneSet, out: np.ndarray | None = None):
    """Copy lanes in index order into `out`; returns (out, item_count)."""
    total = lanes.total_items
    if out is None:
        out = aligned_empty(total, lanes.item_dtype)
    if out.shape[0] < total:
        raise ValueError(f"output holds {out.shape[0]} items, need {total}")
    _kernels.gather_lanes(lanes.items, lanes.bases, lanes.next_cursor, out, 0)
    return out, total
