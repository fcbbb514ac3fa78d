"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL
line (run with -s to see them on success).
"""

import os
import platform
import random
import time

import numpy as np
import pytest

import vmradix as vr
from vmradix.reservoir import PAGE_BYTES
from vmradix.wc import streaming_store_mode

from conftest import stable_key_sort

SIZES = [0, 1, 2, 10**3, 10**5, 10**6]
DISTS = ["uniform", "all-equal", "sorted", "reverse", "msd-skew", "duplicates"]
THREADS = [1, 2, 8]


def _criterion(num: int, ok: bool, detail: str):
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def oracle_matrix():
    """Every (n, dist, value_bits, threads) cell, compared to the oracle."""
    mismatches = []
    stability_breaks = []
    cells = 0
    t_start = time.monotonic()
    for ni, n in enumerate(SIZES):
        for di, dist in enumerate(DISTS):
            for vb in (0, 32):
                seed = ni * 100 + di * 10 + vb
                items = vr.generate(n, dist, seed=seed, with_values=vb == 32)
                want = stable_key_sort(items)
                for threads in THREADS:
                    out, _ = vr.sort(items, vr.RadixConfig(pe_count=threads))
                    cells += 1
                    if not np.array_equal(out, want):
                        mismatches.append((n, dist, vb, threads))
                    if vb == 32:
                        verdict = vr.verify(out, items, values_are_indices=True)
                        if not verdict.ok:
                            stability_breaks.append(
                                (n, dist, threads, verdict.failure))
    return {"cells": cells, "mismatches": mismatches,
            "stability_breaks": stability_breaks,
            "seconds": time.monotonic() - t_start}


def test_criterion_1_oracle_equivalence(oracle_matrix):
    m = oracle_matrix
    _criterion(1, not m["mismatches"],
               f"{m['cells']} configurations match the reference stable sort "
               f"exactly in {m['seconds']:.1f}s"
               + (f"; mismatches: {m['mismatches'][:3]}" if m["mismatches"] else ""))


def test_criterion_2_stability(oracle_matrix):
    m = oracle_matrix
    _criterion(2, not m["stability_breaks"],
               "every equal-key run preserves original index order across all "
               "value-carrying configurations"
               + (f"; broken: {m['stability_breaks'][:3]}"
                  if m["stability_breaks"] else ""))


def test_criterion_3_wc_bit_exactness():
    rnd = random.Random(20260810)
    bad = []
    for trial in range(100):
        n = int(10 ** rnd.uniform(0, 6))
        seed = rnd.getrandbits(48)
        items = vr.generate(n, "uniform", seed=seed)
        cfg = dict(pe_count=2)
        out_wc, _ = vr.sort_keys(items, vr.RadixConfig(use_wc=True, **cfg))
        out_vm, _ = vr.sort_keys(items, vr.RadixConfig(use_wc=False, **cfg))
        if out_wc.tobytes() != out_vm.tobytes():
            bad.append((trial, n, seed))
    _criterion(3, not bad,
               "write-combined and plain outputs byte-identical on 100 random "
               "(seed, n) pairs" + (f"; diverged: {bad[:3]}" if bad else ""))


def test_criterion_4_residency_bound():
    n = 10**6
    recs = vr.generate(n, "uniform", seed=4, with_values=True)  # 8-byte items
    with vr.counting_sort(recs, lane_bits=8, shift=24, stride=n) as lanes:
        committed = lanes.region.committed_bytes
        reserved = lanes.region.reserved_bytes
        bound = n * 8 + 2 * 256 * PAGE_BYTES
        ok = committed <= bound and reserved == 256 * n * 8
        _criterion(4, ok,
                   f"committed {committed:,} B <= bound {bound:,} B while "
                   f"reserving {reserved:,} B")


def test_criterion_5_address_space_budget():
    n = 10**6
    arith = 3 * (2**8) * 8
    results = []
    for with_values in (False, True):
        items = vr.generate(n, "uniform", seed=5, with_values=with_values)
        _, report = vr.sort(items, vr.RadixConfig(pe_count=8))
        expected = 3 * 256 * 8 * report.stride_items * items.itemsize
        results.append(report.lane_reserved_bytes == expected
                       and report.stride_items == n
                       and report.lane_reserved_bytes == 6144 * items.nbytes)
    ok = all(results) and arith == 6144
    _criterion(5, ok,
               f"reserved lane bytes = 3*2^8*8*stride*item = {arith}x input "
               f"at full stride for both item widths")


def test_criterion_6_traffic_model():
    n = 10**6
    lines = []
    ok = True
    for with_values in (False, True):
        items = vr.generate(n, "uniform", seed=6, with_values=with_values)
        _, report = vr.sort(items, vr.RadixConfig(pe_count=2))
        model = 4 * n * items.itemsize
        measured = sum(report.bytes_written_per_pass)
        ok = ok and abs(measured - model) <= 0.05 * model
        lines.append(f"{items.itemsize}B items: {measured:,} vs model {model:,}")
    _criterion(6, ok, "scatter passes wrote " + "; ".join(lines))


def test_criterion_7_reduced_width_exhaustive():
    cfg = vr.RadixConfig(key_bits=16, digit_bits=4, pe_count=1)
    t0 = time.monotonic()
    single_bad = 0
    for k in range(1 << 16):
        out, _ = vr.sort_keys(np.array([k], dtype=np.uint32), cfg)
        if out.shape[0] != 1 or out[0] != k:
            single_bad += 1
    rnd = np.random.default_rng(7)
    multi_bad = 0
    for trial in range(10**5):
        n = int(rnd.integers(2, 24))
        if trial % 10 == 0:
            keys = rnd.integers(0, 1 << 16, n).astype(np.uint32)
            recs = vr.fuse_records(keys, np.arange(n, dtype=np.uint32))
            out, _ = vr.sort_records(recs, cfg)
            if not np.array_equal(out, stable_key_sort(recs)):
                multi_bad += 1
        else:
            keys = rnd.integers(0, 1 << 16, n).astype(np.uint32)
            out, _ = vr.sort_keys(keys, cfg)
            if not np.array_equal(out, np.sort(keys)):
                multi_bad += 1
    elapsed = time.monotonic() - t0
    _criterion(7, single_bad == 0 and multi_bad == 0,
               f"16-bit/4-bit pipeline matched the oracle on all 65536 "
               f"single-item and 100000 random inputs in {elapsed:.0f}s")


def test_criterion_8_flush_discipline():
    rnd = random.Random(88)
    violations = 0
    for _ in range(300):
        lane_count = rnd.choice([2, 8, 64])
        n = rnd.randrange(0, 200)
        dtype = rnd.choice([np.uint32, np.uint64])
        staging = vr.make_staging(lane_count, dtype)
        stride = 256
        staging.dest_cursor[:] = np.arange(lane_count, dtype=np.int64) * stride
        dest = np.zeros(lane_count * stride, dtype=dtype)
        want = np.zeros_like(dest)
        cursors = np.arange(lane_count, dtype=np.int64) * stride
        staged = [0] * lane_count
        for step in range(n):
            lane = rnd.randrange(lane_count)
            item = dtype(step + 1)
            flushed = staging.stage(lane, item, dest)
            staged[lane] += 1
            if flushed != (staged[lane] % staging.items_per_line == 0):
                violations += 1
            want[cursors[lane]] = item
            cursors[lane] += 1
        staging.drain(dest)
        if not np.array_equal(dest, want):
            violations += 1
    _criterion(8, violations == 0,
               "flush fires exactly on line-multiple fills and stage+drain "
               "equals direct scatter over 300 random sequences")


def test_criterion_9_throughput_smoke():
    n = 64 * 1024 * 1024
    threads = min(8, os.cpu_count() or 1)
    keys = vr.generate(n, "uniform", seed=9)
    best = {}
    for use_wc in (True, False):  # warm both paths (JIT + allocator)
        cfg = vr.RadixConfig(pe_count=threads, use_wc=use_wc)
        out, _ = vr.sort_keys(keys, cfg)
        verdict = vr.verify(out, keys)
        assert verdict.ok, verdict
        del out
    for rep in range(3):
        for use_wc in (False, True):
            cfg = vr.RadixConfig(pe_count=threads, use_wc=use_wc)
            out, report = vr.sort_keys(keys, cfg)
            rate = n / report.elapsed_seconds
            key = "vmwc" if use_wc else "vm"
            best[key] = max(best.get(key, 0.0), rate)
            del out, report
    ratio = best["vmwc"] / best["vm"]
    detail = (f"vm+wc {best['vmwc'] / 1e6:.1f} M/s vs vm {best['vm'] / 1e6:.1f} "
              f"M/s, ratio {ratio:.2f}x at {threads} threads")
    qualified = ((os.cpu_count() or 1) >= 8 and platform.machine() == "x86_64"
                 and streaming_store_mode() == "available")
    if qualified:
        _criterion(9, ratio >= 1.0, detail)
    else:
        print(f"[criterion 9] REPORT-ONLY - {detail}")
        pytest.skip("host precondition unmet (needs 8 cores, x86-64, "
                    f"streaming stores): {detail}")
