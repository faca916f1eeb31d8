"""Record encoders and sinks for the metric stream.

Every stream follows the same grammar: one metadata record, zero or more
sample records in elapsed order, one summary record. JSON and JSONL are
aliases; both emit one self-contained JSON object per line tagged with a
"type" discriminator. CSV keeps the body rectangular and carries the
metadata and summary as "#"-prefixed JSON comment lines.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import sys
from dataclasses import dataclass
from typing import IO, TYPE_CHECKING

from .errors import OutputError

if TYPE_CHECKING:
    from .monitor import RunMetadata, Sample, Summary


class Format(enum.Enum):
    JSON = "json"
    JSONL = "jsonl"
    CSV = "csv"


CSV_COLUMNS = (
    "ts_ms",
    "elapsed_ms",
    "cpu_percent",
    "mem_rss_bytes",
    "mem_vms_bytes",
    "disk_read_bytes_delta",
    "disk_write_bytes_delta",
    "thread_count",
    "child_process_count",
)
CSV_HEADER = ",".join(CSV_COLUMNS)

_RED = "\x1b[31m"
_YELLOW = "\x1b[33m"
_RESET = "\x1b[0m"


@dataclass(frozen=True)
class SinkDescriptor:
    """Where and how a record stream is written.

    path None means standard output. Files are truncated at run start
    unless append is set.
    """

    path: str | None
    format: Format = Format.JSONL
    append: bool = False


def _record_dict(obj, record_type: str) -> dict:
    fields = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if value is None:
            continue
        fields[f.name] = value
    return {"type": record_type, **fields}


def _json_line(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=True)


def _csv_number(value) -> str:
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def encode_metadata(meta: "RunMetadata", fmt: Format) -> str:
    """One metadata line; first line of every stream."""
    payload = _record_dict(meta, "metadata")
    if fmt is Format.CSV:
        return "#" + _json_line(payload)
    return _json_line(payload)


def encode_sample(sample: "Sample", fmt: Format) -> str:
    """One sample line. Absent optional fields are omitted, not null."""
    if fmt is Format.CSV:
        return ",".join(_csv_number(getattr(sample, col)) for col in CSV_COLUMNS)
    return _json_line(_record_dict(sample, "sample"))


def encode_summary(summary: "Summary", fmt: Format) -> str:
    """One summary line; last line of every stream."""
    payload = _record_dict(summary, "summary")
    if fmt is Format.CSV:
        return "#" + _json_line(payload)
    return _json_line(payload)


def _human_bytes(n: int) -> str:
    value = float(n)
    for unit in ("B", "KiB", "MiB", "GiB", "TiB"):
        if value < 1024.0 or unit == "TiB":
            if unit == "B":
                return f"{int(value)}B"
            return f"{value:.1f}{unit}"
        value /= 1024.0
    raise AssertionError("unreachable")


def render_human(sample: "Sample", color_enabled: bool) -> str:
    """Single live status line for the terminal view.

    Pure: equal samples render to equal bytes. Color only tints the CPU
    figure (>=90 alert, >=50 warm); the plain text is unchanged.
    """
    cpu = f"{sample.cpu_percent:6.1f}%"
    if color_enabled:
        if sample.cpu_percent >= 90.0:
            cpu = f"{_RED}{cpu}{_RESET}"
        elif sample.cpu_percent >= 50.0:
            cpu = f"{_YELLOW}{cpu}{_RESET}"
    return (
        f"{sample.elapsed_ms / 1000.0:8.2f}s"
        f" cpu {cpu}"
        f" rss {_human_bytes(sample.mem_rss_bytes)}"
        f" io +{_human_bytes(sample.disk_read_bytes_delta)}"
        f"/+{_human_bytes(sample.disk_write_bytes_delta)}"
        f" thr {sample.thread_count}"
        f" chld {sample.child_process_count}"
    )


class RecordSink:
    """Single-writer sink enforcing the stream grammar.

    Flushes after every record so a crash loses at most one.
    """

    def __init__(self, stream: IO[str], fmt: Format, owns_stream: bool):
        self._stream = stream
        self._fmt = fmt
        self._owns_stream = owns_stream

    def _write_line(self, line: str) -> None:
        try:
            self._stream.write(line + "\n")
            self._stream.flush()
        except OSError as exc:
            raise OutputError(f"sink write failed: {exc}") from exc

    def write_metadata(self, meta: "RunMetadata") -> None:
        self._write_line(encode_metadata(meta, self._fmt))
        if self._fmt is Format.CSV:
            self._write_line(CSV_HEADER)

    def write_sample(self, sample: "Sample") -> None:
        self._write_line(encode_sample(sample, self._fmt))

    def write_summary(self, summary: "Summary") -> None:
        self._write_line(encode_summary(summary, self._fmt))

    def close(self) -> None:
        if self._owns_stream:
            try:
                self._stream.close()
            except OSError as exc:
                raise OutputError(f"sink close failed: {exc}") from exc


def open_sink(descriptor: SinkDescriptor) -> RecordSink:
    """Open the described sink; files are created or truncated now."""
    if descriptor.path is None:
        return RecordSink(sys.stdout, descriptor.format, owns_stream=False)
    mode = "a" if descriptor.append else "w"
    try:
        stream = open(descriptor.path, mode, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot open {descriptor.path}: {exc}") from exc
    return RecordSink(stream, descriptor.format, owns_stream=True)
