"""Programmatic process monitoring for scripts and notebooks.

Wraps the procwatch command-line profiler: a ProcessMonitor spawns the
profiler as a subprocess and reads back its JSONL record stream, so the
only coupling is the CLI grammar and the documented wire format.

    import denet

    monitor = denet.ProcessMonitor(
        cmd=["python", "-c", "import time; time.sleep(10)"],
        base_interval_ms=100,
        max_interval_ms=1000,
        store_in_memory=True,
        output_file=None,
        include_children=True,
    )
    monitor.run()
    samples = monitor.get_samples()
    summary_json = monitor.get_summary()
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import tempfile

__version__ = "0.1.0"

__all__ = ["ProcessMonitor", "RepeatRunError", "StateError", "attach_pid"]


class StateError(RuntimeError):
    """A result accessor was called in a state that cannot serve it."""


class RepeatRunError(RuntimeError):
    """run() was called a second time on the same monitor."""


def _profiler_argv() -> list[str]:
    return [sys.executable, "-m", "procwatch"]


def _validate_intervals(base_interval_ms: int, max_interval_ms: int) -> None:
    if base_interval_ms < 1:
        raise ValueError(f"base_interval_ms must be >= 1, got {base_interval_ms}")
    if max_interval_ms < base_interval_ms:
        raise ValueError(
            f"max_interval_ms ({max_interval_ms}) must not be below "
            f"base_interval_ms ({base_interval_ms})"
        )


class ProcessMonitor:
    """Monitor one command from spawn to exit and collect its metrics.

    run() blocks the caller until the target completes; samples are
    collected concurrently by the profiler subprocess. The target's
    standard streams are inherited, never captured, so arbitrarily
    chatty programs cannot deadlock the monitor.
    """

    def __init__(
        self,
        cmd: list[str],
        base_interval_ms: int = 100,
        max_interval_ms: int = 1000,
        store_in_memory: bool = True,
        output_file: str | None = None,
        include_children: bool = True,
    ):
        if not cmd:
            raise ValueError("cmd must contain at least one token")
        _validate_intervals(base_interval_ms, max_interval_ms)
        self.cmd = list(cmd)
        self.base_interval_ms = base_interval_ms
        self.max_interval_ms = max_interval_ms
        self.store_in_memory = store_in_memory
        self.output_file = output_file
        self.include_children = include_children
        self._subcommand = ["run", *self.cmd]
        self._duration_s: float | None = None
        self._ran = False
        self._samples: list[dict] | None = None
        self._summary: dict | None = None

    def run(self) -> None:
        """Spawn the target and block until it completes.

        Raises RepeatRunError on a second call and RuntimeError when the
        profiler could not start the target at all.
        """
        if self._ran:
            raise RepeatRunError("this monitor already ran; create a new one")
        self._ran = True

        temp_path: str | None = None
        if self.output_file is not None:
            stream_path = self.output_file
        else:
            fd, temp_path = tempfile.mkstemp(prefix="denet-", suffix=".jsonl")
            os.close(fd)
            stream_path = temp_path
        try:
            completed = subprocess.run(self._build_argv(stream_path))
            records = self._read_stream(stream_path)
            summary = next(
                (r for r in reversed(records) if r.get("type") == "summary"), None
            )
            if summary is None:
                raise RuntimeError(
                    f"profiler exited with status {completed.returncode} "
                    "before producing a summary"
                )
            summary.pop("type", None)
            self._summary = summary
            if self.store_in_memory:
                samples = []
                for record in records:
                    if record.get("type") == "sample":
                        record.pop("type", None)
                        samples.append(record)
                self._samples = samples
        finally:
            if temp_path is not None:
                try:
                    os.unlink(temp_path)
                except OSError:
                    pass

    def _build_argv(self, stream_path: str) -> list[str]:
        argv = [
            *_profiler_argv(),
            "--quiet",
            "--interval",
            str(self.base_interval_ms),
            "--max-interval",
            str(self.max_interval_ms),
            "--out",
            stream_path,
        ]
        if not self.include_children:
            argv.append("--no-include-children")
        if self._duration_s is not None:
            argv += ["--duration", f"{self._duration_s:g}"]
        return argv + self._subcommand

    @staticmethod
    def _read_stream(path: str) -> list[dict]:
        try:
            with open(path, encoding="utf-8") as f:
                return [json.loads(line) for line in f if line.strip()]
        except (OSError, json.JSONDecodeError) as exc:
            raise RuntimeError(f"could not read the metric stream: {exc}") from exc

    def get_samples(self) -> list[dict]:
        """All collected samples in chronological order."""
        if not self._ran or self._summary is None:
            raise StateError("run() has not completed")
        if not self.store_in_memory or self._samples is None:
            raise StateError("samples were not stored; pass store_in_memory=True")
        return list(self._samples)

    def get_summary(self) -> str:
        """The end-of-run summary as a JSON object string."""
        if not self._ran or self._summary is None:
            raise StateError("run() has not completed")
        return json.dumps(self._summary, separators=(",", ":"))

    def get_summary_dict(self) -> dict:
        """The summary as a mapping, for callers that skip the JSON hop."""
        if not self._ran or self._summary is None:
            raise StateError("run() has not completed")
        return dict(self._summary)


def attach_pid(
    pid: int,
    base_interval_ms: int = 100,
    max_interval_ms: int = 1000,
    store_in_memory: bool = True,
    output_file: str | None = None,
    include_children: bool = True,
    duration_s: float | None = None,
) -> ProcessMonitor:
    """Monitor an already-running process instead of spawning one.

    Mirrors the CLI's attach subcommand; duration_s bounds how long the
    monitor stays attached. The returned monitor is used exactly like a
    spawned one, except its summary never carries an exit code.
    """
    if pid < 1:
        raise ValueError(f"pid must be positive, got {pid}")
    monitor = ProcessMonitor(
        cmd=[str(pid)],
        base_interval_ms=base_interval_ms,
        max_interval_ms=max_interval_ms,
        store_in_memory=store_in_memory,
        output_file=output_file,
        include_children=include_children,
    )
    monitor.cmd = []
    monitor._subcommand = ["attach", str(pid)]
    monitor._duration_s = duration_s
    return monitor
