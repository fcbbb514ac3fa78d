"""Parallel radix sort: one top-digit partition, then per-bucket local LSD
passes with the final pass writing straight to the output.

32-bit keys are consumed in four 8-bit digits. Phase 1 splits the input
statically across workers; each worker counting-sorts its slice by the top
digit into its own pre-reserved lanes. After one barrier, bucket sizes are
reduced across workers, an exclusive prefix sum fixes every top-digit value's
output range, and contiguous blocks of top-digit values are handed to workers
balanced by item count. Phase 2 runs three LSD passes per bucket: gather by
digit 0, scatter by digit 1 while histogramming digit 2, then place items at
their exact output positions. Three lane sets per worker back this, so the
address-space reservation is 3 * 2^D * workers * stride items; committed
pages stay proportional to the data actually written.

Every write position is computed, never contended, so output is bit-identical
for a given input and configuration regardless of scheduling, and the sort is
stable end to end: workers own contiguous input slices, buckets are gathered
in worker index order, and each pass preserves arrival order per lane.
"""

import os
import threading
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import _kernels, wc
from .errors import ConfigError, LaneOverflowError
from .items import KEY_DTYPE, RECORD_DTYPE, aligned_empty, items_per_line
from .reservoir import reserve


@dataclass(frozen=True)
class RadixConfig:
    key_bits: int = 32
    digit_bits: int = 8
    pe_count: int = 1
    stride_policy: str = "full"     # "full" (stride = n) or "uniform"
    stride_slack: float = 1.5       # uniform policy: stride = slack * n / 2^D
    use_wc: bool = True
    first_touch: bool = True

    def __post_init__(self):
        if self.digit_bits < 1 or self.digit_bits > 8:
            raise ConfigError("digit_bits must be in [1, 8]")
        if self.key_bits != 4 * self.digit_bits:
            raise ConfigError("the pipeline runs exactly 4 passes; "
                              "key_bits must equal 4 * digit_bits")
        if self.pe_count < 1 or self.pe_count > 1024:
            raise ConfigError("pe_count must be in [1, 1024]")
        if self.stride_policy not in ("full", "uniform"):
            raise ConfigError(f"unknown stride policy {self.stride_policy!r}")
        if self.stride_policy == "uniform" and self.stride_slack <= 0:
            raise ConfigError("stride_slack must be positive")

    @property
    def passes(self) -> int:
        return self.key_bits // self.digit_bits

    @property
    def lane_count(self) -> int:
        return 1 << self.digit_bits


@dataclass
class GlobalPlan:
    """Cross-worker reduction of top-digit bucket sizes.

    output_indices is the exclusive prefix sum of bucket_sizes; worker p owns
    the contiguous top-digit values [pe_ranges[p], pe_ranges[p+1]).
    """
    bucket_sizes: np.ndarray
    output_indices: np.ndarray
    pe_ranges: np.ndarray

    @property
    def total(self) -> int:
        if self.bucket_sizes.size == 0:
            return 0
        return int(self.output_indices[-1] + self.bucket_sizes[-1])

    def owner(self, msd: int) -> int:
        return int(np.searchsorted(self.pe_ranges, msd, side="right") - 1)


@dataclass
class SortReport:
    schema_version: int = 1
    n: int = 0
    item_bytes: int = 0
    key_bits: int = 32
    digit_bits: int = 8
    passes: int = 4
    pe_count: int = 1
    algorithm: str = "vmwc"
    stride_policy: str = "full"
    stride_items: int = 0
    lane_reserved_bytes: int = 0
    region_reserved_bytes: int = 0
    committed_lane_bytes: int = 0
    bytes_written_per_pass: list = field(default_factory=list)
    line_flushes_per_pass: list = field(default_factory=list)
    plain_items_per_pass: list = field(default_factory=list)
    streaming_stores: str = "unavailable"
    large_pages_input: str = "unused"
    t0: float = 0.0
    t1: float = 0.0
    phase_seconds: dict = field(default_factory=dict)
    verification: dict | None = None

    @property
    def elapsed_seconds(self) -> float:
        return self.t1 - self.t0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["elapsed_seconds"] = self.elapsed_seconds
        return d


def digit(items, pass_index: int, digit_bits: int = 8):
    """Digit `pass_index` of the key, least significant digit at index 0."""
    shift = np.uint64(digit_bits * pass_index)
    mask = np.uint64((1 << digit_bits) - 1)
    if isinstance(items, np.ndarray):
        return ((items.astype(np.uint64) >> shift) & mask).astype(np.uint16)
    return int((int(items) >> int(shift)) & int(mask))


def _item_dtype_of(items: np.ndarray):
    if items.dtype == KEY_DTYPE or items.dtype == RECORD_DTYPE:
        return items.dtype
    raise ConfigError(f"items must be {KEY_DTYPE} keys or {RECORD_DTYPE} "
                      f"records, got {items.dtype}")


def _round_up(value: int, granule: int) -> int:
    return (value + granule - 1) // granule * granule


class MsdPartition:
    """Reserved lane storage for all three bucket sets of every worker, plus
    the phase-1 cursors. Lane (worker pe, set s, digit d) starts at item
    offset ((pe*3 + s)*M + d) * stride; set 0 holds the top-digit buckets,
    sets 1 and 2 the two intermediate LSD bucket generations.
    """

    def __init__(self, items: np.ndarray, cfg: RadixConfig):
        self.cfg = cfg
        self.items_in = items
        self.dtype = _item_dtype_of(items)
        self.item_bytes = self.dtype.itemsize
        self.ipl = items_per_line(self.dtype)
        n = items.shape[0]
        M = cfg.lane_count
        if cfg.stride_policy == "full":
            stride = n
        else:
            stride = int(np.ceil(cfg.stride_slack * n / M))
        self.stride = _round_up(max(stride, self.ipl), self.ipl)
        self.lane_reserved_bytes = 3 * M * cfg.pe_count * self.stride * self.item_bytes
        self.region = reserve(self.lane_reserved_bytes)
        self.lanes = self.region.view(self.dtype,
                                      count=3 * M * cfg.pe_count * self.stride)
        pe_ix = np.arange(cfg.pe_count, dtype=np.int64)[:, None]
        d_ix = np.arange(M, dtype=np.int64)[None, :]
        self.base3 = ((pe_ix * 3 + 0) * M + d_ix) * self.stride
        self.base0 = ((pe_ix * 3 + 1) * M + d_ix) * self.stride
        self.base1 = ((pe_ix * 3 + 2) * M + d_ix) * self.stride
        self.next3 = self.base3.copy()
        # static contiguous input split, first workers take the remainder
        self.input_bounds = -((np.arange(cfg.pe_count + 1, dtype=np.int64) * n)
                              // -cfg.pe_count)
        # per-lane high-water lengths of the reused local bucket sets
        self.hw0 = np.zeros((cfg.pe_count, M), dtype=np.int64)
        self.hw1 = np.zeros((cfg.pe_count, M), dtype=np.int64)

    def run_pe(self, pe: int, staging: wc.StagingBufferSet, stats: np.ndarray):
        cfg = self.cfg
        shift = np.uint64((cfg.passes - 1) * cfg.digit_bits)
        mask = np.uint64(cfg.lane_count - 1)
        start, stop = self.input_bounds[pe], self.input_bounds[pe + 1]
        ends = self.base3[pe] + self.stride
        if cfg.use_wc:
            bad = _kernels.scatter_wc(self.items_in, start, stop, shift, mask,
                                      self.lanes, self.next3[pe], ends,
                                      staging.lines, staging.fill,
                                      self.ipl, stats)
            if bad < 0:
                _kernels.drain_lanes(staging.lines, staging.fill,
                                     self.next3[pe], self.lanes, self.ipl,
                                     stats)
        else:
            bad = _kernels.scatter_plain(self.items_in, start, stop, shift,
                                         mask, self.lanes, self.next3[pe],
                                         ends, stats)
        if bad >= 0:
            raise LaneOverflowError(int(bad), pe=pe,
                                    detail="top-digit partition")

    def lane(self, pe: int, m: int) -> np.ndarray:
        return self.lanes[self.base3[pe, m]:self.next3[pe, m]]

    def lane_lengths(self) -> np.ndarray:
        return self.next3 - self.base3

    def account_commits(self):
        size = self.item_bytes
        offsets = np.concatenate([self.base3.ravel(), self.base0.ravel(),
                                  self.base1.ravel()]) * size
        lengths = np.concatenate([(self.next3 - self.base3).ravel(),
                                  self.hw0.ravel(), self.hw1.ravel()]) * size
        self.region.account_many(offsets, lengths)

    def release(self):
        self.region.release()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.release()
        return False


def msd_partition(items: np.ndarray, cfg: RadixConfig) -> MsdPartition:
    """Run phase 1 for every worker slice in the calling thread."""
    part = MsdPartition(items, cfg)
    stats = np.zeros(3, dtype=np.int64)
    for pe in range(cfg.pe_count):
        staging = wc.make_staging(cfg.lane_count, part.dtype)
        part.run_pe(pe, staging, stats)
    return part


def _assign_ranges(sizes: np.ndarray, pe_count: int) -> np.ndarray:
    """Contiguous blocks of top-digit values, greedily balanced by item count."""
    M = sizes.shape[0]
    bounds = np.zeros(pe_count + 1, dtype=np.int64)
    done = 0
    total = int(sizes.sum())
    m = 0
    for pe in range(pe_count):
        if pe == pe_count - 1:
            m = M
        else:
            remaining = total - done
            target = -(-remaining // (pe_count - pe))
            acc = 0
            while m < M and acc < target:
                acc += int(sizes[m])
                m += 1
            done += acc
        bounds[pe + 1] = m
    return bounds


def build_plan(partition_or_lengths, cfg: RadixConfig) -> GlobalPlan:
    if isinstance(partition_or_lengths, MsdPartition):
        lengths = partition_or_lengths.lane_lengths()
    else:
        lengths = np.atleast_2d(np.asarray(partition_or_lengths, dtype=np.int64))
    sizes = lengths.sum(axis=0).astype(np.int64)
    output_indices = np.zeros(sizes.shape[0], dtype=np.int64)
    np.cumsum(sizes[:-1], out=output_indices[1:])
    return GlobalPlan(sizes, output_indices, _assign_ranges(sizes, cfg.pe_count))


def local_sort(msd_range, part: MsdPartition, plan: GlobalPlan,
               output: np.ndarray, pe: int = 0,
               staging: wc.StagingBufferSet | None = None,
               stats: np.ndarray | None = None):
    """Sort the buckets for a contiguous range of top-digit values into
    their final output positions, using worker `pe`'s local lane sets."""
    cfg = part.cfg
    M = cfg.lane_count
    lo, hi = (msd_range.start, msd_range.stop) if isinstance(msd_range, range) \
        else (int(msd_range[0]), int(msd_range[1]))
    if staging is None:
        staging = wc.make_staging(M, part.dtype)
    if stats is None:
        stats = np.zeros((3, 3), dtype=np.int64)
    next0 = part.base0[pe].copy()
    next1 = part.base1[pe].copy()
    hist2 = np.zeros(M, dtype=np.uint32)
    out_cur = np.zeros(M, dtype=np.int64)
    rc = _kernels.local_sort_pe(
        part.lanes, part.base3, part.next3, part.base0[pe], next0,
        part.base1[pe], next1, part.hw0[pe], part.hw1[pe],
        staging.lines, staging.fill, hist2, out_cur, output,
        plan.output_indices, lo, hi, np.int64(cfg.digit_bits),
        np.int64(part.stride), cfg.use_wc, part.ipl,
        stats[0], stats[1], stats[2])
    if rc >= 0:
        raise LaneOverflowError(int(rc & 0xFFFFFFFF), pe=pe,
                                detail=f"local pass {int(rc >> 32)}")


def _set_affinity(pe: int):
    try:
        cpus = sorted(os.sched_getaffinity(0))
        os.sched_setaffinity(0, {cpus[pe % len(cpus)]})
    except (AttributeError, OSError):
        pass


def sort(items: np.ndarray, cfg: RadixConfig | None = None):
    """Stable full-key sort. Returns (output array, SortReport)."""
    cfg = cfg or RadixConfig()
    dtype = _item_dtype_of(items)
    n = items.shape[0]
    report = SortReport(n=n, item_bytes=dtype.itemsize, key_bits=cfg.key_bits,
                        digit_bits=cfg.digit_bits, passes=cfg.passes,
                        pe_count=cfg.pe_count,
                        algorithm="vmwc" if cfg.use_wc else "vm",
                        stride_policy=cfg.stride_policy,
                        streaming_stores=wc.streaming_store_mode())
    if n == 0:
        report.bytes_written_per_pass = [0] * cfg.passes
        report.line_flushes_per_pass = [0] * cfg.passes
        report.plain_items_per_pass = [0] * cfg.passes
        return items.copy(), report

    t_setup = time.monotonic()
    part = MsdPartition(items, cfg)
    try:
        pe_count = cfg.pe_count
        M = cfg.lane_count
        out = aligned_empty(n, dtype)
        plan_holder: list[GlobalPlan | None] = [None]
        stats = np.zeros((pe_count, 4, 3), dtype=np.int64)
        stamps = np.zeros((pe_count, 2), dtype=np.float64)
        phase = np.zeros((pe_count, 3), dtype=np.float64)
        errors: list[BaseException | None] = [None] * pe_count
        barrier = threading.Barrier(pe_count)
        items_per_page = max(1, part.region.page_bytes // dtype.itemsize)

        def worker(pe: int):
            try:
                stamps[pe, 0] = time.monotonic()
                if pe_count > 1:
                    _set_affinity(pe)
                staging = wc.make_staging(M, dtype)
                part.run_pe(pe, staging, stats[pe, 0])
                phase[pe, 0] = time.monotonic() - stamps[pe, 0]
                barrier.wait()
                if pe == 0:
                    t_plan = time.monotonic()
                    plan_holder[0] = build_plan(part, cfg)
                    phase[pe, 1] = time.monotonic() - t_plan
                barrier.wait()
                t_local = time.monotonic()
                plan = plan_holder[0]
                lo, hi = int(plan.pe_ranges[pe]), int(plan.pe_ranges[pe + 1])
                if cfg.first_touch and lo < hi:
                    o_lo = int(plan.output_indices[lo])
                    o_hi = plan.total if hi == M else int(plan.output_indices[hi])
                    _kernels.pretouch(out, o_lo, o_hi, items_per_page)
                local_sort((lo, hi), part, plan, out, pe=pe, staging=staging,
                           stats=stats[pe, 1:])
                phase[pe, 2] = time.monotonic() - t_local
                stamps[pe, 1] = time.monotonic()
            except BaseException as exc:  # propagate to the caller
                errors[pe] = exc
                barrier.abort()

        if pe_count == 1:
            worker(0)
        else:
            threads = [threading.Thread(target=worker, args=(pe,),
                                        name=f"radix-pe{pe}")
                       for pe in range(pe_count)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        for exc in errors:
            if exc is not None and not isinstance(exc, threading.BrokenBarrierError):
                raise exc
        t_account = time.monotonic()
        part.account_commits()

        report.stride_items = part.stride
        report.lane_reserved_bytes = part.lane_reserved_bytes
        report.region_reserved_bytes = part.region.reserved_bytes
        report.committed_lane_bytes = part.region.committed_bytes
        totals = stats.sum(axis=0)
        report.bytes_written_per_pass = [int(x) for x in totals[:, 0]]
        report.line_flushes_per_pass = [int(x) for x in totals[:, 1]]
        report.plain_items_per_pass = [int(x) for x in totals[:, 2]]
        report.t0 = float(stamps[:, 0].min())
        report.t1 = float(stamps[:, 1].max())
        report.phase_seconds = {
            "setup": float(stamps[:, 0].min() - t_setup),
            "msd_partition": float(phase[:, 0].max()),
            "plan": float(phase[0, 1]),
            "local_sort": float(phase[:, 2].max()),
            "account": float(time.monotonic() - t_account),
        }
        return out, report
    finally:
        part.release()


def sort_keys(keys: np.ndarray, cfg: RadixConfig | None = None):
    """Sort a uint32 key array."""
    keys = np.ascontiguousarray(keys, dtype=KEY_DTYPE)
    return sort(keys, cfg)


def sort_records(records: np.ndarray, cfg: RadixConfig | None = None):
    """Sort fused key/value records (uint64, key in the low half)."""
    records = np.ascontiguousarray(records, dtype=RECORD_DTYPE)
    return sort(records, cfg)
