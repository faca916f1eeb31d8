"""Per-process resource profiler.

Launches or attaches to a target process and streams per-interval CPU,
memory, disk-I/O, thread and child-process metrics on a fixed or
adaptive sampling schedule, with JSON/JSONL/CSV output and an
end-of-run statistical summary.
"""

from .errors import (
    ConfigError,
    InvalidWindow,
    NoSuchProcess,
    OutputError,
    ParseError,
    PermissionDenied,
    ProcessGone,
    ProcwatchError,
    SpawnFailed,
    TargetExited,
    UsageError,
)
from .monitor import (
    CommandTarget,
    ExitStatus,
    Monitor,
    MonitorConfig,
    PidTarget,
    RunMetadata,
    Sample,
    Summary,
    summarize,
)
from .output import Format, SinkDescriptor
from .schedule import Mode, SamplingPolicy, next_interval

__version__ = "0.1.0"

__all__ = [
    "CommandTarget",
    "ConfigError",
    "ExitStatus",
    "Format",
    "InvalidWindow",
    "Mode",
    "Monitor",
    "MonitorConfig",
    "NoSuchProcess",
    "OutputError",
    "ParseError",
    "PermissionDenied",
    "PidTarget",
    "ProcessGone",
    "ProcwatchError",
    "RunMetadata",
    "Sample",
    "SamplingPolicy",
    "SinkDescriptor",
    "SpawnFailed",
    "Summary",
    "TargetExited",
    "UsageError",
    "next_interval",
    "summarize",
    "__version__",
]
