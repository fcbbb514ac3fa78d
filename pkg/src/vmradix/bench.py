"""Benchmark harness and CLI.

Generates deterministic inputs, runs a chosen sort variant, verifies the
output against an independent stable sort, and reports throughput as
n / (t1 - t0) where t0 is the earliest worker start and t1 the latest worker
finish. The first repetition is treated as warm-up and excluded from summary
statistics unless --include-warmup is given; it is still reported separately
since first-touch page faults and JIT make it systematically slower.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 resource failure (address space or physical memory).
"""

import argparse
import csv as csv_mod
import json
import os
import sys
import time
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from . import keygen, reservoir, wc
from .errors import CommitError, ConfigError, ReservationError, SortError
from .items import KEY_DTYPE, RECORD_DTYPE, keys_of, split_records
from .radix import RadixConfig, SortReport, sort

SCHEMA_VERSION = 1

# Throughput measured for this technique on a dual 4-core x86 node with
# DDR3-1066, for scale only; never asserted.
REFERENCE_CONTEXT = {"keys_only_m_per_s": 621, "key_value_m_per_s": 430,
                     "hardware": "2x 4-core x86-64, DDR3-1066"}

ALGOS = ("vm", "vmwc", "ref")


@dataclass(frozen=True)
class BenchSpec:
    n: int = 64 * 1024 * 1024
    value_bits: int = 0
    algo: str = "vmwc"
    threads: int = 1
    dist: str = "uniform"
    seed: int = 1
    reps: int = 1
    fmt: str = "human"
    verify_output: bool = True
    stride_policy: str = "full"
    stride_slack: float = 1.5
    large_pages: bool = True
    streaming: bool = True
    include_warmup: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError("n must be non-negative")
        if self.value_bits not in (0, 32):
            raise ConfigError("values must be 0 or 32 bits")
        if self.algo not in ALGOS:
            raise ConfigError(f"algo must be one of {ALGOS}")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        keygen.parse_dist(self.dist)


@dataclass
class VerifyVerdict:
    ok: bool
    failure: str | None = None
    index: int | None = None
    detail: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass
class ThroughputResult:
    n: int
    rep: int
    warmup: bool
    items_per_second: float
    t0: float
    t1: float
    elapsed_seconds: float
    checksum: int
    verified: str
    report: dict

    def to_dict(self):
        return asdict(self)


def reference_sort(items: np.ndarray) -> np.ndarray:
    """Platform stable sort on keys; the independent correctness oracle."""
    order = np.argsort(keys_of(items), kind="stable")
    return np.ascontiguousarray(items[order])


def verify(output: np.ndarray, input_items: np.ndarray,
           values_are_indices: bool = False) -> VerifyVerdict:
    """Check order, multiset equality, and (with index payloads) stability."""
    n_in, n_out = input_items.shape[0], output.shape[0]
    if n_in != n_out:
        return VerifyVerdict(False, "count", min(n_in, n_out),
                             f"{n_out} items out, {n_in} in")
    if n_out == 0:
        return VerifyVerdict(True)
    keys = keys_of(output)
    drop = np.nonzero(keys[1:] < keys[:-1])[0]
    if drop.size:
        i = int(drop[0]) + 1
        return VerifyVerdict(False, "order", i,
                             f"key {keys[i]:#010x} after {keys[i - 1]:#010x}")
    sorted_out = np.sort(output)
    sorted_in = np.sort(input_items)
    diff = np.nonzero(sorted_out != sorted_in)[0]
    if diff.size:
        i = int(diff[0])
        return VerifyVerdict(False, "multiset", i,
                             f"sorted streams diverge at {i}")
    if values_are_indices and output.dtype == RECORD_DTYPE:
        _, values = split_records(output)
        equal_run = keys[1:] == keys[:-1]
        bad = np.nonzero(equal_run & (values[1:] <= values[:-1]))[0]
        if bad.size:
            i = int(bad[0]) + 1
            return VerifyVerdict(False, "stability", i,
                                 f"index {values[i]} follows {values[i - 1]} "
                                 f"for equal key {keys[i]:#010x}")
    return VerifyVerdict(True)


def _make_input(spec: BenchSpec):
    """Generate items, backed by a (best-effort) large-page region."""
    items = keygen.generate(spec.n, spec.dist, spec.seed,
                            with_values=spec.value_bits == 32)
    if spec.n == 0:
        return items, None, "unused"
    try:
        region = reservoir.reserve(max(items.nbytes, 1),
                                   large_pages=spec.large_pages)
    except ReservationError:
        return items, None, "fallback-heap"
    view = region.view(items.dtype, count=spec.n)
    view[:] = items
    region.account(0, items.nbytes)
    if region.large_pages:
        mode = "on"
    elif not spec.large_pages or reservoir.large_pages_disabled():
        mode = "disabled"
    else:
        mode = "fallback-small"
    return view, region, mode


def _run_once(spec: BenchSpec, items: np.ndarray, cfg: RadixConfig | None):
    if spec.algo == "ref":
        t0 = time.monotonic()
        out = reference_sort(items)
        t1 = time.monotonic()
        report = SortReport(n=spec.n, item_bytes=items.dtype.itemsize,
                            algorithm="ref", pe_count=1, t0=t0, t1=t1,
                            streaming_stores="n/a")
        return out, report
    return sort(items, cfg)


def run(spec: BenchSpec):
    """Execute warm-up plus spec.reps measured repetitions.

    Returns (results, summary) where results[0] is the warm-up run.
    """
    cfg = None
    if spec.algo != "ref":
        cfg = RadixConfig(pe_count=spec.threads,
                          use_wc=spec.algo == "vmwc",
                          stride_policy=spec.stride_policy,
                          stride_slack=spec.stride_slack)
    items, region, lp_mode = _make_input(spec)
    try:
        results = []
        for rep in range(spec.reps + 1):
            out, report = _run_once(spec, items, cfg)
            report.large_pages_input = lp_mode
            if not spec.streaming:
                report.streaming_stores = wc.streaming_store_mode(False)
            if spec.verify_output:
                verdict = verify(out, items,
                                 values_are_indices=spec.value_bits == 32)
                report.verification = verdict.to_dict()
                verified = "pass" if verdict.ok else "fail"
            else:
                verified = "skipped"
            elapsed = report.t1 - report.t0
            results.append(ThroughputResult(
                n=spec.n, rep=rep, warmup=rep == 0,
                items_per_second=spec.n / elapsed if elapsed > 0 else 0.0,
                t0=report.t0, t1=report.t1, elapsed_seconds=elapsed,
                checksum=zlib.crc32(out.tobytes()), verified=verified,
                report=report.to_dict()))
            del out
        measured = [r for r in results
                    if spec.include_warmup or not r.warmup]
        rates = sorted(r.items_per_second for r in measured)
        summary = {
            "items_per_second_best": rates[-1],
            "items_per_second_median": rates[len(rates) // 2],
            "verified": ("skipped" if not spec.verify_output else
                         "pass" if all(r.verified == "pass" for r in results)
                         else "fail"),
            "checksum": results[-1].checksum,
            "checksums_identical": len({r.checksum for r in results}) == 1,
        }
        return results, summary
    finally:
        if region is not None:
            del items
            region.release()


def _context() -> dict:
    return {
        "cpu_count": os.cpu_count(),
        "page_bytes": reservoir.PAGE_BYTES,
        "streaming_stores": wc.streaming_store_mode(),
        "reference_throughput": REFERENCE_CONTEXT,
    }


def _emit_human(spec, results, summary, out):
    ctx = _context()
    ref = ctx["reference_throughput"]
    print(f"vmradix bench: n={spec.n} values={spec.value_bits} "
          f"algo={spec.algo} threads={spec.threads} dist={spec.dist} "
          f"seed={spec.seed}", file=out)
    print(f"host: {ctx['cpu_count']} cpus, page={ctx['page_bytes']}B, "
          f"streaming stores: {ctx['streaming_stores']}", file=out)
    print(f"reference ({ref['hardware']}): {ref['keys_only_m_per_s']} M/s keys, "
          f"{ref['key_value_m_per_s']} M/s key+value", file=out)
    for r in results:
        tag = "warmup" if r.warmup else f"rep {r.rep}"
        line = (f"  {tag}: {r.items_per_second / 1e6:8.2f} M/s  "
                f"{r.elapsed_seconds * 1e3:9.2f} ms  verify={r.verified}")
        bw = r.report.get("bytes_written_per_pass") or []
        if bw:
            line += f"  bytes/pass={bw}"
        print(line, file=out)
    print(f"summary: best {summary['items_per_second_best'] / 1e6:.2f} M/s, "
          f"median {summary['items_per_second_median'] / 1e6:.2f} M/s, "
          f"verified={summary['verified']}, "
          f"checksum={summary['checksum']:#010x}", file=out)


def _emit_json(spec, results, summary, out):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "spec": asdict(spec),
        "context": _context(),
        "warmup": results[0].to_dict() if results else None,
        "runs": [r.to_dict() for r in results[1:]],
        "summary": summary,
    }
    json.dump(doc, out, indent=2)
    out.write("\n")


_CSV_FIELDS = ["rep", "warmup", "algo", "n", "value_bits", "threads", "dist",
               "seed", "items_per_second", "elapsed_seconds", "t0", "t1",
               "verified", "checksum", "bytes_pass0", "bytes_pass1",
               "bytes_pass2", "bytes_pass3", "committed_lane_bytes",
               "lane_reserved_bytes", "streaming_stores", "large_pages_input"]


def _emit_csv(spec, results, summary, out):
    w = csv_mod.DictWriter(out, fieldnames=_CSV_FIELDS)
    w.writeheader()
    for r in results:
        rep = r.report
        bw = rep.get("bytes_written_per_pass") or [0, 0, 0, 0]
        bw = list(bw) + [0] * (4 - len(bw))
        w.writerow({
            "rep": r.rep, "warmup": int(r.warmup), "algo": spec.algo,
            "n": r.n, "value_bits": spec.value_bits, "threads": spec.threads,
            "dist": spec.dist, "seed": spec.seed,
            "items_per_second": f"{r.items_per_second:.3f}",
            "elapsed_seconds": f"{r.elapsed_seconds:.6f}",
            "t0": f"{r.t0:.6f}", "t1": f"{r.t1:.6f}",
            "verified": r.verified, "checksum": r.checksum,
            "bytes_pass0": bw[0], "bytes_pass1": bw[1], "bytes_pass2": bw[2],
            "bytes_pass3": bw[3],
            "committed_lane_bytes": rep.get("committed_lane_bytes", 0),
            "lane_reserved_bytes": rep.get("lane_reserved_bytes", 0),
            "streaming_stores": rep.get("streaming_stores", ""),
            "large_pages_input": rep.get("large_pages_input", ""),
        })


def _parse_stride(text: str):
    if text == "full":
        return "full", 1.5
    if text.startswith("uniform"):
        _, _, slack = text.partition(":")
        return "uniform", float(slack) if slack else 1.5
    raise ConfigError(f"stride must be 'full' or 'uniform:<slack>', got {text!r}")


def build_spec(argv) -> BenchSpec:
    p = argparse.ArgumentParser(
        prog="vmradix-bench",
        description="Generate, sort, verify and time 32-bit key workloads.")
    p.add_argument("--n", type=int, default=64 * 1024 * 1024)
    p.add_argument("--values", type=int, choices=(0, 32), default=0)
    p.add_argument("--algo", choices=ALGOS, default="vmwc")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--dist", default="uniform",
                   help="uniform | all-equal | sorted | reverse | "
                        "msd-skew[:p] | duplicates[:k]")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--format", choices=("human", "json", "csv"),
                   default="human", dest="fmt")
    p.add_argument("--no-verify", action="store_true")
    p.add_argument("--stride", default="full",
                   help="full | uniform:<slack>")
    p.add_argument("--no-large-pages", action="store_true")
    p.add_argument("--no-streaming", action="store_true")
    p.add_argument("--include-warmup", action="store_true",
                   help="count the warm-up repetition in summary statistics")
    args = p.parse_args(argv)
    policy, slack = _parse_stride(args.stride)
    return BenchSpec(n=args.n, value_bits=args.values, algo=args.algo,
                     threads=args.threads, dist=args.dist, seed=args.seed,
                     reps=args.reps, fmt=args.fmt,
                     verify_output=not args.no_verify,
                     stride_policy=policy, stride_slack=slack,
                     large_pages=not args.no_large_pages,
                     streaming=not args.no_streaming,
                     include_warmup=args.include_warmup)


def main(argv=None) -> int:
    try:
        spec = build_spec(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        results, summary = run(spec)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ReservationError, CommitError) as exc:
        print(f"resource failure: {exc}", file=sys.stderr)
        return 3
    emit = {"human": _emit_human, "json": _emit_json, "csv": _emit_csv}[spec.fmt]
    emit(spec, results, summary, sys.stdout)
    if spec.verify_output:
        for r in results:
            if r.verified != "pass":
                v = r.report.get("verification") or {}
                print(f"verification FAILED on rep {r.rep}: "
                      f"{v.get('failure')} at index {v.get('index')}: "
                      f"{v.get('detail')}", file=sys.stderr)
                return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
