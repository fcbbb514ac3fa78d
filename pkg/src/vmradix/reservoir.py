"""Address-space reservation with lazy physical commit.

A ReservedRegion maps a large anonymous range as readable/writable without
charging physical memory up front (MAP_NORESERVE). The OS attaches pages on
first write; this module additionally keeps an exact model of which pages
have been handed out, maintained through touch()/account() calls, so callers
can assert residency bounds without trusting OS counters.

Large pages are best-effort: a huge-page mapping is attempted without
MAP_NORESERVE (deferred hugetlb reservation would turn exhaustion into a
fatal SIGBUS instead of a clean error) and the region falls back to small
pages unless strict mode is requested. The environment variable
VMRADIX_NO_LARGE_PAGES=1 force-disables huge-page attempts.
"""

import ctypes
import os
import sys
import threading
from bisect import bisect_left, bisect_right

import numpy as np

from .errors import CommitError, RegionReleasedError, ReservationError

PAGE_BYTES = os.sysconf("SC_PAGESIZE") if hasattr(os, "sysconf") else 4096

_PROT_READ = 0x1
_PROT_WRITE = 0x2
_MAP_PRIVATE = 0x02
_MAP_ANONYMOUS = 0x20
_MAP_NORESERVE = 0x4000
_MAP_HUGETLB = 0x40000
_MAP_FAILED = 2 ** (ctypes.sizeof(ctypes.c_void_p) * 8) - 1
_MADV_POPULATE_WRITE = 23

NO_LARGE_PAGES_ENV = "VMRADIX_NO_LARGE_PAGES"

_libc = ctypes.CDLL(None, use_errno=True)
_libc.mmap.restype = ctypes.c_void_p
_libc.mmap.argtypes = [ctypes.c_void_p, ctypes.c_size_t, ctypes.c_int,
                       ctypes.c_int, ctypes.c_int, ctypes.c_long]
_libc.munmap.restype = ctypes.c_int
_libc.munmap.argtypes = [ctypes.c_void_p, ctypes.c_size_t]
_libc.madvise.restype = ctypes.c_int
_libc.madvise.argtypes = [ctypes.c_void_p, ctypes.c_size_t, ctypes.c_int]


def _round_up(value: int, granule: int) -> int:
    return (value + granule - 1) // granule * granule


def large_pages_disabled() -> bool:
    return os.environ.get(NO_LARGE_PAGES_ENV, "") not in ("", "0")


class ReservedRegion:
    """A reserved address range with page-granular commit accounting.

    The accounting model is authoritative for committed_bytes: a page counts
    as committed once any byte of it has been touched/accounted, and the
    total is page_bytes times the number of distinct touched pages.
    """

    def __init__(self, capacity: int, large_pages: bool = False,
                 strict_large_pages: bool = False):
        if capacity <= 0:
            raise ReservationError(f"capacity must be positive, got {capacity}")
        if sys.maxsize < 2**32:
            raise ReservationError("address-space over-reservation needs a 64-bit host")
        self.page_bytes = PAGE_BYTES
        self.reserved_bytes = _round_up(capacity, self.page_bytes)
        self.large_pages = False

        addr = None
        if large_pages and not large_pages_disabled():
            # No MAP_NORESERVE here: hugetlb pages must be reserved eagerly
            # so failure surfaces as ENOMEM now rather than SIGBUS later.
            addr = _libc.mmap(None, self.reserved_bytes, _PROT_READ | _PROT_WRITE,
                              _MAP_PRIVATE | _MAP_ANONYMOUS | _MAP_HUGETLB, -1, 0)
            if addr in (None, _MAP_FAILED):
                if strict_large_pages:
                    err = ctypes.get_errno()
                    raise ReservationError(
                        f"large-page reservation of {self.reserved_bytes} bytes failed "
                        f"(errno {err}); no fallback in strict mode")
                addr = None
            else:
                self.large_pages = True
        if addr is None:
            if large_pages and strict_large_pages and large_pages_disabled():
                raise ReservationError(
                    f"large pages force-disabled via {NO_LARGE_PAGES_ENV}")
            addr = _libc.mmap(None, self.reserved_bytes, _PROT_READ | _PROT_WRITE,
                              _MAP_PRIVATE | _MAP_ANONYMOUS | _MAP_NORESERVE, -1, 0)
            if addr in (None, _MAP_FAILED):
                err = ctypes.get_errno()
                raise ReservationError(
                    f"could not reserve {self.reserved_bytes} bytes of address space "
                    f"(errno {err})")

        self.base = addr
        self._buf = (ctypes.c_char * self.reserved_bytes).from_address(addr)
        self._released = False
        self._lock = threading.Lock()
        # Disjoint committed intervals in page units: parallel sorted lists of
        # [start, stop) page indices.
        self._starts: list[int] = []
        self._stops: list[int] = []
        self._committed_pages = 0

    # -- lifecycle ---------------------------------------------------------

    def _check_alive(self):
        if self._released:
            raise RegionReleasedError("region has been released")

    def release(self):
        self._check_alive()
        self._released = True
        self._buf = None
        if _libc.munmap(self.base, self.reserved_bytes) != 0:
            raise ReservationError(
                f"munmap failed (errno {ctypes.get_errno()})")

    def __del__(self):
        if getattr(self, "_released", True) is False:
            self._released = True
            self._buf = None
            _libc.munmap(self.base, self.reserved_bytes)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if not self._released:
            self.release()
        return False

    # -- commit accounting ---------------------------------------------------

    def _page_span(self, offset: int, length: int):
        if offset < 0 or length < 0 or offset + length > self.reserved_bytes:
            raise ValueError(
                f"range [{offset}, {offset + length}) outside reserved "
                f"{self.reserved_bytes} bytes")
        if length == 0:
            return 0, 0
        return offset // self.page_bytes, (offset + length - 1) // self.page_bytes + 1

    def _insert_interval(self, lo: int, hi: int):
        # Merge [lo, hi) into the disjoint interval lists. Caller holds _lock.
        starts, stops = self._starts, self._stops
        i = bisect_left(stops, lo)
        j = bisect_right(starts, hi)
        if i < j:
            lo = min(lo, starts[i])
            hi = max(hi, stops[j - 1])
            removed = sum(stops[k] - starts[k] for k in range(i, j))
            del starts[i:j]
            del stops[i:j]
            self._committed_pages -= removed
        starts.insert(i, lo)
        stops.insert(i, hi)
        self._committed_pages += hi - lo

    def account(self, offset: int, length: int) -> int:
        """Record [offset, offset+length) as committed; returns the byte delta.

        Model-only: used after bulk writes have already faulted the pages in.
        """
        self._check_alive()
        lo, hi = self._page_span(offset, length)
        if lo == hi:
            return 0
        with self._lock:
            before = self._committed_pages
            self._insert_interval(lo, hi)
            return (self._committed_pages - before) * self.page_bytes

    def account_many(self, offsets: np.ndarray, lengths: np.ndarray) -> int:
        """Batched account() for many ranges at once."""
        self._check_alive()
        offsets = np.asarray(offsets, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=np.int64)
        keep = lengths > 0
        if not keep.all():
            offsets, lengths = offsets[keep], lengths[keep]
        if offsets.size == 0:
            return 0
        if (offsets < 0).any() or (offsets + lengths > self.reserved_bytes).any():
            raise ValueError("range outside reservation")
        lo = offsets // self.page_bytes
        hi = (offsets + lengths - 1) // self.page_bytes + 1
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        with self._lock:
            before = self._committed_pages
            run_lo = int(lo[0])
            run_hi = int(hi[0])
            for k in range(1, lo.shape[0]):
                a, b = int(lo[k]), int(hi[k])
                if a <= run_hi:
                    run_hi = max(run_hi, b)
                else:
                    self._insert_interval(run_lo, run_hi)
                    run_lo, run_hi = a, b
            self._insert_interval(run_lo, run_hi)
            return (self._committed_pages - before) * self.page_bytes

    def touch(self, offset: int, length: int, populate: bool = True) -> int:
        """Commit all pages covering [offset, offset+length); returns byte delta.

        With populate=True the pages are faulted in immediately so commit
        failure surfaces here as CommitError rather than as an OOM kill at
        first write.
        """
        self._check_alive()
        lo, hi = self._page_span(offset, length)
        if lo == hi:
            return 0
        if populate:
            rc = _libc.madvise(self.base + lo * self.page_bytes,
                               (hi - lo) * self.page_bytes, _MADV_POPULATE_WRITE)
            if rc != 0:
                err = ctypes.get_errno()
                if err == 12:  # ENOMEM
                    raise CommitError(
                        f"could not commit {(hi - lo) * self.page_bytes} bytes "
                        f"(physical memory exhausted)")
                # Kernels without MADV_POPULATE_WRITE: demand paging still
                # commits on first write, keep the accounting.
        return self.account(offset, length)

    @property
    def committed_bytes(self) -> int:
        self._check_alive()
        with self._lock:
            return self._committed_pages * self.page_bytes

    # -- data access ---------------------------------------------------------

    def view(self, dtype=np.uint8, offset: int = 0, count: int | None = None) -> np.ndarray:
        """Zero-copy numpy view of the region. Must not outlive release()."""
        self._check_alive()
        dtype = np.dtype(dtype)
        if count is None:
            count = (self.reserved_bytes - offset) // dtype.itemsize
        if offset < 0 or offset + count * dtype.itemsize > self.reserved_bytes:
            raise ValueError("view outside reservation")
        return np.frombuffer(self._buf, dtype=dtype, count=count, offset=offset)


def reserve(capacity: int, large_pages: bool = False,
            strict_large_pages: bool = False) -> ReservedRegion:
    """Reserve `capacity` bytes of address space (rounded up to page size)."""
    return ReservedRegion(capacity, large_pages=large_pages,
                          strict_large_pages=strict_large_pages)
