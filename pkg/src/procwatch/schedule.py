"""Sampling interval schedules: fixed rate, or an adaptive ramp.

The adaptive strategy samples at the base interval for the first second,
then widens the interval linearly until it reaches the configured maximum
at the ten second mark, where it stays for the rest of the run. This
keeps startup and short-lived bursts at full resolution while bounding
the overhead of long runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigError

DEFAULT_BASE_INTERVAL_MS = 100
DEFAULT_MAX_INTERVAL_MS = 1000
RAMP_START_MS = 1000
RAMP_END_MS = 10000


class Mode(enum.Enum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class SamplingPolicy:
    """Immutable description of a sampling schedule."""

    mode: Mode
    base_interval_ms: int
    max_interval_ms: int
    ramp_start_ms: int = RAMP_START_MS
    ramp_end_ms: int = RAMP_END_MS

    def __post_init__(self) -> None:
        if self.base_interval_ms < 1:
            raise ConfigError(
                f"base interval must be >= 1 ms, got {self.base_interval_ms}"
            )
        if self.mode is Mode.ADAPTIVE and self.max_interval_ms < self.base_interval_ms:
            raise ConfigError(
                f"max interval ({self.max_interval_ms} ms) is below the "
                f"base interval ({self.base_interval_ms} ms)"
            )
        if self.ramp_start_ms >= self.ramp_end_ms:
            raise ConfigError("ramp start must precede ramp end")

    @classmethod
    def fixed(cls, interval_ms: int) -> "SamplingPolicy":
        return cls(Mode.FIXED, interval_ms, interval_ms)

    @classmethod
    def adaptive(
        cls,
        base_interval_ms: int = DEFAULT_BASE_INTERVAL_MS,
        max_interval_ms: int = DEFAULT_MAX_INTERVAL_MS,
    ) -> "SamplingPolicy":
        return cls(Mode.ADAPTIVE, base_interval_ms, max_interval_ms)

    def describe(self) -> str:
        """Round-trippable one-line description of the schedule."""
        if self.mode is Mode.FIXED:
            return f"fixed --interval {self.base_interval_ms}"
        return (
            f"adaptive --interval {self.base_interval_ms}"
            f" --max-interval {self.max_interval_ms}"
        )


def next_interval(policy: SamplingPolicy, elapsed_ms: float) -> int:
    """Sampling interval in ms for a process that has run elapsed_ms.

    Deterministic in its inputs; monotone non-decreasing in elapsed_ms.
    """
    if policy.mode is Mode.FIXED:
        return policy.base_interval_ms
    if elapsed_ms < policy.ramp_start_ms:
        return policy.base_interval_ms
    if elapsed_ms >= policy.ramp_end_ms:
        return policy.max_interval_ms
    span = policy.ramp_end_ms - policy.ramp_start_ms
    rise = policy.max_interval_ms - policy.base_interval_ms
    return policy.base_interval_ms + round(
        (elapsed_ms - policy.ramp_start_ms) * rise / span
    )
