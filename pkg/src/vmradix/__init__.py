"""Sorting for 32-bit integer keys (optionally fused with 32-bit payloads)
built on two ideas: reserving far more address space than physical memory so
counting sort needs no counting pass, and staging scattered writes in
cache-line buffers so they reach memory as full-line bursts.
"""

from .errors import (CommitError, ConfigError, LaneOverflowError,
                     RegionReleasedError, ReservationError, SortError)
from .items import fuse_records, keys_of, split_records
from .reservoir import ReservedRegion, reserve
from .counting import LaneSet, concatenate, counting_sort
from .wc import StagingBufferSet, flush_line, layout_check, make_staging
from .keygen import Well512, generate
from .radix import (GlobalPlan, MsdPartition, RadixConfig, SortReport,
                    build_plan, digit, local_sort, msd_partition, sort,
                    sort_keys, sort_records)
from .bench import BenchSpec, ThroughputResult, reference_sort, run, verify

__version__ = "0.1.0"

__all__ = [
    "BenchSpec", "CommitError", "ConfigError", "GlobalPlan", "LaneOverflowError",
    "LaneSet", "MsdPartition", "RadixConfig", "RegionReleasedError",
    "ReservationError", "ReservedRegion", "SortError", "SortReport",
    "StagingBufferSet", "ThroughputResult", "Well512", "build_plan",
    "concatenate", "counting_sort", "digit", "flush_line", "fuse_records",
    "generate", "keys_of", "layout_check", "local_sort", "make_staging",
    "msd_partition", "reference_sort", "reserve", "run", "sort", "sort_keys",
    "sort_records", "split_records", "verify",
]
