import gc

import numpy as np
import pytest

import vmradix as vr


def read_rss_kib() -> int:
    with open("/proc/self/status") as f:
        for line in f:
            if line.startswith("VmRSS:"):
                return int(line.split()[1])
    raise RuntimeError("VmRSS not found")


def settle_rss() -> int:
    gc.collect()
    return read_rss_kib()


def stable_key_sort(items: np.ndarray) -> np.ndarray:
    """Independent stable oracle used across test modules."""
    order = np.argsort(vr.keys_of(items), kind="stable")
    return items[order]


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile every kernel specialization once so timing-sensitive tests and
    # RSS baselines are not polluted by JIT artifacts
    for dtype in (np.uint32, np.uint64):
        data = np.arange(40, dtype=dtype)
        vr.sort(data, vr.RadixConfig(pe_count=2))
        vr.sort(data, vr.RadixConfig(pe_count=2, use_wc=False))
        vr.sort(data[:8], vr.RadixConfig(key_bits=16, digit_bits=4))
        ls = vr.counting_sort(data, lane_bits=4)
        vr.concatenate(ls)
        ls.release()
    vr.generate(16, "uniform", seed=0)
