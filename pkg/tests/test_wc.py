import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import vmradix as vr
from vmradix.items import LINE_BYTES
from vmradix.wc import L1_BUDGET_BYTES, layout_check


def direct_scatter(lane_seq, items, lane_count, stride, dtype):
    """Per-item reference: write each item straight to its lane cursor."""
    dest = np.zeros(lane_count * stride, dtype=dtype)
    cursors = np.arange(lane_count, dtype=np.int64) * stride
    for lane, item in zip(lane_seq, items):
        dest[cursors[lane]] = item
        cursors[lane] += 1
    return dest, cursors


def staged_scatter(lane_seq, items, lane_count, stride, dtype):
    dest = np.zeros(lane_count * stride, dtype=dtype)
    staging = vr.make_staging(lane_count, dtype)
    staging.dest_cursor[:] = np.arange(lane_count, dtype=np.int64) * stride
    flushes = []
    for lane, item in zip(lane_seq, items):
        flushes.append(staging.stage(lane, item, dest))
    staging.drain(dest)
    return dest, staging.dest_cursor.copy(), flushes


def test_eighth_item_flushes_64_bytes():
    dest = np.zeros(64, dtype=np.uint64)
    staging = vr.make_staging(4, np.uint64)
    staging.dest_cursor[:] = np.arange(4, dtype=np.int64) * 16
    assert staging.items_per_line == 8
    for i in range(7):
        assert staging.stage(1, 100 + i, dest) is False
        assert dest.sum() == 0  # nothing reached the destination yet
    assert staging.stage(1, 107, dest) is True
    assert list(dest[16:24]) == [100 + i for i in range(8)]
    assert staging.dest_cursor[1] == 24
    assert staging.fill[1] == 0


def test_two_lanes_flush_independently():
    dest = np.zeros(64, dtype=np.uint64)
    staging = vr.make_staging(2, np.uint64)
    staging.dest_cursor[:] = [0, 32]
    flushed_at = []
    for i in range(32):
        lane = i % 2
        if staging.stage(lane, i, dest):
            flushed_at.append((lane, i))
    # each lane flushes at its own 8th, 16th item: global steps 14,15,30,31
    assert flushed_at == [(0, 14), (1, 15), (0, 30), (1, 31)]


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_staging_equals_direct_scatter(data):
    lane_count = data.draw(st.sampled_from([2, 4, 16]))
    dtype = data.draw(st.sampled_from([np.uint32, np.uint64]))
    n = data.draw(st.integers(0, 300))
    lane_seq = data.draw(st.lists(st.integers(0, lane_count - 1),
                                  min_size=n, max_size=n))
    items = np.arange(1, n + 1).astype(dtype)
    stride = 320
    want, want_cursors = direct_scatter(lane_seq, items, lane_count, stride, dtype)
    got, got_cursors, _ = staged_scatter(lane_seq, items, lane_count, stride, dtype)
    assert np.array_equal(want, got)
    assert np.array_equal(want_cursors, got_cursors)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 7), max_size=400))
def test_flush_iff_fill_divisible_by_line_capacity(lane_seq):
    dest = np.zeros(8 * 512, dtype=np.uint64)
    staging = vr.make_staging(8, np.uint64)
    staging.dest_cursor[:] = np.arange(8, dtype=np.int64) * 512
    ipl = staging.items_per_line
    staged_count = [0] * 8
    for step, lane in enumerate(lane_seq):
        flushed = staging.stage(lane, step, dest)
        staged_count[lane] += 1
        assert flushed == (staged_count[lane] % ipl == 0)
        assert staging.fill[lane] == staged_count[lane] % ipl  # never full between calls


def test_drain_noop_when_empty():
    dest = np.full(64, 77, dtype=np.uint64)
    staging = vr.make_staging(4, np.uint64)
    staging.drain(dest)
    assert (dest == 77).all()
    assert (staging.fill == 0).all()


def test_drain_writes_exactly_the_partial_fill():
    dest = np.zeros(64, dtype=np.uint64)
    staging = vr.make_staging(4, np.uint64)
    staging.dest_cursor[:] = np.arange(4, dtype=np.int64) * 16
    for item in (5, 6, 7):
        staging.stage(2, item, dest)
    stats = np.zeros(3, dtype=np.int64)
    staging.drain(dest, stats)
    assert list(dest[32:36]) == [5, 6, 7, 0]
    assert staging.dest_cursor[2] == 35
    assert stats[2] == 3 and stats[0] == 3 * 8


def test_random_fills_across_256_lanes_match_direct_scatter():
    rng = np.random.default_rng(42)
    n = 20000
    lane_seq = rng.integers(0, 256, n)
    items = rng.integers(0, 2**63, n, dtype=np.uint64)
    want, _ = direct_scatter(lane_seq, items, 256, 96, np.uint64)
    got, _, _ = staged_scatter(lane_seq, items, 256, 96, np.uint64)
    assert np.array_equal(want, got)


def test_flush_line_copies_known_pattern():
    src = vr.make_staging(1, np.uint64).lines
    src[:] = np.arange(8, dtype=np.uint64) + np.uint64(0xAB00)
    dst = vr.items.aligned_empty(16, np.uint64)
    dst[:] = 1
    vr.flush_line(src, 0, dst, 8)
    assert np.array_equal(dst[8:], src)
    assert (dst[:8] == 1).all()


def test_flush_line_never_reads_destination():
    # run twice against different destination garbage: results identical
    src = vr.make_staging(1, np.uint64).lines
    src[:] = np.arange(8, dtype=np.uint64)
    outs = []
    for fill_value in (0, 0xFFFFFFFFFFFFFFFF):
        dst = vr.items.aligned_empty(8, np.uint64)
        dst[:] = fill_value
        vr.flush_line(src, 0, dst, 0)
        outs.append(dst.copy())
    assert np.array_equal(outs[0], outs[1])


def test_flush_line_rejects_unaligned_destination():
    src = vr.make_staging(1, np.uint64).lines
    dst = vr.items.aligned_empty(16, np.uint64)
    with pytest.raises(AssertionError):
        vr.flush_line(src, 0, dst, 3)


def test_contiguous_buffers_minimize_set_aliasing():
    staging = vr.make_staging(256, np.uint64)
    diag = staging.layout_check()
    # 256 * 64 B = 16 KiB spans four 4 KiB stretches: 4 per congruence class
    assert diag.analytic_min == 4
    assert diag.max_per_class == 4
    assert not diag.aliased


def test_page_strided_layout_is_flagged():
    addresses = np.arange(16, dtype=np.int64) * 4096
    diag = layout_check(addresses)
    assert diag.max_per_class == 16
    assert diag.aliased


def test_single_buffer_has_no_conflicts():
    diag = layout_check(np.array([1 << 20], dtype=np.int64))
    assert diag.max_per_class == 1
    assert not diag.aliased


def test_working_set_fits_l1_for_256_lanes():
    for dtype in (np.uint32, np.uint64):
        staging = vr.make_staging(256, dtype)
        assert staging.working_set_bytes <= L1_BUDGET_BYTES
        addrs = staging.buffer_addresses()
        assert (addrs % LINE_BYTES == 0).all()
        assert (np.diff(addrs) == LINE_BYTES).all()


def test_item_sizes_must_divide_the_line():
    with pytest.raises(ValueError):
        vr.make_staging(4, np.dtype("(3,)u1"))
