"""Compiled hot loops. Every kernel releases the GIL so worker threads can
run concurrently; none of them allocate. Overflow is reported by returning
the offending lane (encoded with the pass index) instead of raising, since
these run without the interpreter.

Item scatter comes in two flavours: `scatter_plain` writes each item straight
to its lane cursor; `scatter_wc` stages items in per-lane line buffers and
copies a full line per flush. Both advance the same cursor arrays, so the
resulting lane contents are identical.
"""

import numpy as np
from numba import njit

U32_MASK = np.uint64(0xFFFFFFFF)


@njit(inline="always")
def _digit(item, shift, mask):
    return np.int64((np.uint64(item) >> shift) & mask)


@njit(inline="always")
def _stage_step(lines, fill, cursors, dest, lane, item, ipl):
    # Flush exactly when the post-incremented staged count reaches a full
    # line; the buffer is copied as one contiguous burst.
    f = fill[lane]
    lines[lane * ipl + f] = item
    f += 1
    if f == ipl:
        dst = cursors[lane]
        base = lane * ipl
        for j in range(ipl):
            dest[dst + j] = lines[base + j]
        cursors[lane] = dst + ipl
        fill[lane] = 0
        return True
    fill[lane] = f
    return False


@njit(nogil=True, cache=True)
def stage_one(lines, fill, cursors, dest, lane, item, ipl):
    return _stage_step(lines, fill, cursors, dest, lane, item, ipl)


@njit(nogil=True, cache=True)
def flush_line(src, src_idx, dst, dst_idx, ipl):
    for j in range(ipl):
        dst[dst_idx + j] = src[src_idx + j]


@njit(nogil=True, cache=True)
def drain_lanes(lines, fill, cursors, dest, ipl, stats):
    # End-of-pass partial buffers go out as plain writes.
    for lane in range(fill.shape[0]):
        f = fill[lane]
        if f > 0:
            dst = cursors[lane]
            base = lane * ipl
            for j in range(f):
                dest[dst + j] = lines[base + j]
            cursors[lane] = dst + f
            fill[lane] = 0
            stats[0] += f * dest.itemsize
            stats[2] += f


@njit(nogil=True, cache=True)
def scatter_plain(items, start, stop, shift, mask, lanes, cursors, lane_end,
                  stats):
    written = np.int64(0)
    for i in range(start, stop):
        it = items[i]
        d = _digit(it, shift, mask)
        nx = cursors[d]
        if nx == lane_end[d]:
            stats[0] += written * lanes.itemsize
            stats[2] += written
            return d
        lanes[nx] = it
        cursors[d] = nx + 1
        written += 1
    stats[0] += written * lanes.itemsize
    stats[2] += written
    return np.int64(-1)


@njit(nogil=True, cache=True)
def scatter_wc(items, start, stop, shift, mask, lanes, cursors, lane_end,
               lines, fill, ipl, stats):
    flushes = np.int64(0)
    for i in range(start, stop):
        it = items[i]
        d = _digit(it, shift, mask)
        if cursors[d] + fill[d] == lane_end[d]:
            stats[0] += flushes * ipl * lanes.itemsize
            stats[1] += flushes
            return d
        if _stage_step(lines, fill, cursors, lanes, d, it, ipl):
            flushes += 1
    stats[0] += flushes * ipl * lanes.itemsize
    stats[1] += flushes
    return np.int64(-1)


@njit(nogil=True, cache=True)
def pretouch(arr, start, stop, items_per_page):
    # First-touch of an output range by its owning worker, one store per page.
    i = start
    while i < stop:
        arr[i] = 0
        i += items_per_page


@njit(nogil=True, cache=True)
def local_sort_pe(lanes, base3, next3, base0, next0, base1, next1, hw0, hw1,
                  lines, fill, hist2, out_cur, out, output_indices,
                  msd_lo, msd_hi, d_bits, stride, use_wc, ipl,
                  stats0, stats1, stats2):
    """Three LSD passes over each assigned top-digit bucket.

    Pass A gathers every worker's bucket for the current top digit into the
    local digit-0 lanes. Pass B moves digit-0 lanes into digit-1 lanes while
    accumulating the digit-2 histogram. Pass C places each item at its final,
    globally computed output position; line staging there starts only once a
    lane's output cursor is line-aligned, with unaligned head and tail going
    through plain writes.

    Returns -1, or (pass_index << 32 | lane) for the lane that overflowed.
    """
    M = np.int64(1) << d_bits
    mask = (np.uint64(1) << np.uint64(d_bits)) - np.uint64(1)
    shift1 = np.uint64(d_bits)
    shift2 = np.uint64(2 * d_bits)
    pe_count = base3.shape[0]
    ipl_m1 = ipl - 1

    for m in range(msd_lo, msd_hi):
        for d in range(M):
            next0[d] = base0[d]
            fill[d] = 0
            hist2[d] = 0

        # pass A: digit 0, reading bucket m of every worker in index order
        plain_a = np.int64(0)
        flush_a = np.int64(0)
        for pe in range(pe_count):
            for i in range(base3[pe, m], next3[pe, m]):
                it = lanes[i]
                d = _digit(it, np.uint64(0), mask)
                if next0[d] + fill[d] == base0[d] + stride:
                    return (np.int64(0) << 32) | d
                if use_wc:
                    if _stage_step(lines, fill, next0, lanes, d, it, ipl):
                        flush_a += 1
                else:
                    lanes[next0[d]] = it
                    next0[d] += 1
                    plain_a += 1
        if use_wc:
            drain_lanes(lines, fill, next0, lanes, ipl, stats0)
        stats0[0] += flush_a * ipl * lanes.itemsize + plain_a * lanes.itemsize
        stats0[1] += flush_a
        stats0[2] += plain_a
        for d in range(M):
            ln = next0[d] - base0[d]
            if ln > hw0[d]:
                hw0[d] = ln

        # pass B: digit 1, histogram of digit 2
        for d in range(M):
            next1[d] = base1[d]
            fill[d] = 0
        plain_b = np.int64(0)
        flush_b = np.int64(0)
        for d0 in range(M):
            for i in range(base0[d0], next0[d0]):
                it = lanes[i]
                d = _digit(it, shift1, mask)
                if next1[d] + fill[d] == base1[d] + stride:
                    return (np.int64(1) << 32) | d
                if use_wc:
                    if _stage_step(lines, fill, next1, lanes, d, it, ipl):
                        flush_b += 1
                else:
                    lanes[next1[d]] = it
                    next1[d] += 1
                    plain_b += 1
                d2 = _digit(it, shift2, mask)
                hist2[d2] += 1
        if use_wc:
            drain_lanes(lines, fill, next1, lanes, ipl, stats1)
        stats1[0] += flush_b * ipl * lanes.itemsize + plain_b * lanes.itemsize
        stats1[1] += flush_b
        stats1[2] += plain_b
        for d in range(M):
            ln = next1[d] - base1[d]
            if ln > hw1[d]:
                hw1[d] = ln

        # pass C: digit 2, direct to the final output positions
        run = output_indices[m]
        for d in range(M):
            out_cur[d] = run
            run += np.int64(hist2[d])
            fill[d] = 0
        plain_c = np.int64(0)
        flush_c = np.int64(0)
        for d1 in range(M):
            for i in range(base1[d1], next1[d1]):
                it = lanes[i]
                d = _digit(it, shift2, mask)
                pos = out_cur[d]
                if use_wc:
                    f = fill[d]
                    if f == 0 and (pos & ipl_m1) != 0:
                        out[pos] = it
                        plain_c += 1
                    else:
                        lines[d * ipl + f] = it
                        f += 1
                        if f == ipl:
                            dst = pos + 1 - ipl
                            base = d * ipl
                            for j in range(ipl):
                                out[dst + j] = lines[base + j]
                            flush_c += 1
                            f = 0
                        fill[d] = f
                else:
                    out[pos] = it
                    plain_c += 1
                out_cur[d] = pos + 1
        if use_wc:
            for d in range(M):
                f = fill[d]
                if f > 0:
                    dst = out_cur[d] - f
                    base = d * ipl
                    for j in range(f):
                        out[dst + j] = lines[base + j]
                    plain_c += f
                    fill[d] = 0
        stats2[0] += flush_c * ipl * out.itemsize + plain_c * out.itemsize
        stats2[1] += flush_c
        stats2[2] += plain_c

    return np.int64(-1)


@njit(nogil=True, cache=True)
def gather_lanes(lanes, bases, cursors, out, out_start):
    pos = out_start
    for lane in range(bases.shape[0]):
        for i in range(bases[lane], cursors[lane]):
            out[pos] = lanes[i]
            pos += 1
    return pos


@njit(cache=True)
def well512_fill(state, index, out):
    """Advance the 16-word recurrence, writing out.shape[0] words.

    State words stay below 2^32; arithmetic runs in uint64 with explicit
    masking. Returns the new index.
    """
    for i in range(out.shape[0]):
        a = state[index]
        c = state[(index + 13) & 15]
        b = (a ^ (a << 16) ^ c ^ (c << 15)) & U32_MASK
        c = state[(index + 9) & 15]
        c = c ^ (c >> 11)
        a = b ^ c
        state[index] = a
        d = a ^ ((a << 5) & np.uint64(0xDA442D24))
        index = (index + 15) & 15
        a = state[index]
        state[index] = (a ^ b ^ d ^ (a << 2) ^ (b << 18) ^ (c << 28)) & U32_MASK
        out[i] = state[index]
    return index
