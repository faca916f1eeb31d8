"""CPU-time deltas to top/htop-convention percentages.

100% is one fully busy core; a process saturating four cores reads 400%.
"""

from __future__ import annotations

import functools
import os
from dataclasses import dataclass

from .errors import InvalidWindow


@functools.lru_cache(maxsize=None)
def ticks_per_second() -> int:
    """The kernel's CPU accounting granularity; constant per boot."""
    return os.sysconf("SC_CLK_TCK")


@dataclass(frozen=True)
class CpuTimes:
    """One CPU-time reading: total ticks plus when it was taken."""

    total_ticks: int
    at_monotonic_ms: float


def cpu_percent(prev: CpuTimes, curr: CpuTimes, tps: int | None = None) -> float:
    """Percentage of one core used between two readings.

    Clamped below at 0 (counter hiccups never yield negative load) but
    deliberately not clamped above 100: multi-threaded processes report
    the sum over cores.
    """
    if tps is None:
        tps = ticks_per_second()
    if tps <= 0:
        raise InvalidWindow(f"ticks_per_second must be positive, got {tps}")
    window_ms = curr.at_monotonic_ms - prev.at_monotonic_ms
    if window_ms <= 0:
        raise InvalidWindow(f"non-positive sampling window: {window_ms} ms")
    delta_ticks = curr.total_ticks - prev.total_ticks
    if delta_ticks <= 0:
        return 0.0
    return 100.0 * (delta_ticks / tps) / (window_ms / 1000.0)
