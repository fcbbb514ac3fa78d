class SortError(Exception):
    """Base class for all vmradix errors."""


class ConfigError(SortError):
    """Invalid configuration (bad digit width, distribution name, flag combination)."""


class ReservationError(SortError):
    """Address-space reservation failed (exhausted address space, 32-bit host,
    or large pages unavailable in strict mode). Distinct from running out of
    physical memory, which is CommitError."""


class CommitError(SortError):
    """Physical memory could not be committed to a reserved range."""


class RegionReleasedError(SortError):
    """Operation on a region after release(), including double release."""


class LaneOverflowError(SortError):
    """A lane received more items than its stride allows.

    Only possible when stride < n. Carries the offending lane so callers can
    diagnose the key distribution.
    """

    def __init__(self, lane, pe=None, detail=""):
        self.lane = lane
        self.pe = pe
        where = f"lane {lane}" if pe is None else f"lane {lane} (worker {pe})"
        super().__init__(f"{where} exceeded its stride{': ' + detail if detail else ''}")
