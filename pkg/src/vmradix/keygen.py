"""Deterministic input generation: WELL512 uniform keys plus adversarial
distributions for stress-testing partitioning and load balance.

Seeding scheme: the 16 state words come from iterating splitmix64 on the
64-bit seed and keeping the low half of each output; an all-zero expansion
(impossible with this mixer, but guarded anyway) is remapped to a fixed
nonzero pattern. Two generators built from equal seeds produce identical
streams on every platform.
"""

import re

import numpy as np

from . import _kernels
from .errors import ConfigError
from .items import fuse_records

_MASK64 = (1 << 64) - 1

DISTRIBUTIONS = ("uniform", "all-equal", "sorted", "reverse", "msd-skew",
                 "duplicates")


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


def expand_seed(seed: int) -> np.ndarray:
    """16 uint32 state words from a 64-bit seed."""
    x = seed & _MASK64
    words = []
    for _ in range(16):
        x, z = _splitmix64(x)
        words.append(z & 0xFFFFFFFF)
    if not any(words):
        words = [0x9E3779B9] * 16
    return np.array(words, dtype=np.uint64)


class Well512:
    """16x32-bit shift-register generator, one word per step."""

    def __init__(self, seed: int = 0):
        self.state = expand_seed(seed)
        self.index = 0

    def next_word(self) -> int:
        out = np.empty(1, dtype=np.uint32)
        self.index = _kernels.well512_fill(self.state, self.index, out)
        return int(out[0])

    def fill(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.uint32)
        self.index = _kernels.well512_fill(self.state, self.index, out)
        return out

    def spawn(self, stream: int) -> "Well512":
        """Decorrelated generator for per-worker streams."""
        mixed = (int(self.state[0]) << 32) | int(self.state[1])
        child = Well512.__new__(Well512)
        child.state = expand_seed(mixed ^ _splitmix64(stream)[1])
        child.index = 0
        return child


def parse_dist(spec: str):
    """'name' or 'name:param' -> (name, param). Unknown names raise."""
    m = re.fullmatch(r"([a-z-]+)(?::([0-9.]+))?", spec.strip())
    if not m or m.group(1) not in DISTRIBUTIONS:
        raise ConfigError(f"unknown distribution {spec!r}; choose from "
                          f"{', '.join(DISTRIBUTIONS)}")
    name, param = m.group(1), m.group(2)
    if name == "msd-skew":
        return name, float(param) if param is not None else 1.0
    if name == "duplicates":
        return name, int(float(param)) if param is not None else 16
    if param is not None:
        raise ConfigError(f"distribution {name!r} takes no parameter")
    return name, None


def generate(n: int, dist: str = "uniform", seed: int = 0,
             with_values: bool = False) -> np.ndarray:
    """Deterministic item array for (dist, seed, n).

    with_values fuses each key with its original index as the 32-bit payload,
    which doubles as the stability witness for verification.
    """
    if n < 0:
        raise ConfigError("n must be non-negative")
    if with_values and n > 2**32:
        raise ConfigError("index payloads need n <= 2^32")
    name, param = parse_dist(dist)
    gen = Well512(seed)
    if name == "uniform":
        keys = gen.fill(n)
    elif name == "all-equal":
        keys = np.full(n, gen.next_word() if n else 0, dtype=np.uint32)
    elif name == "sorted":
        keys = np.sort(gen.fill(n))
    elif name == "reverse":
        keys = np.sort(gen.fill(n))[::-1].copy()
    elif name == "msd-skew":
        keys = gen.fill(n)
        pick = gen.fill(n) < np.uint32(min(max(param, 0.0), 1.0) * 0xFFFFFFFF)
        if param >= 1.0:
            pick[:] = True
        keys[pick] &= np.uint32(0x00FFFFFF)
    else:  # duplicates
        k = max(1, param)
        pool = gen.fill(k)
        keys = pool[gen.fill(n) % np.uint32(k)]
    if not with_values:
        return keys
    return fuse_records(keys, np.arange(n, dtype=np.uint32))
