"""Run orchestration: spawn or attach, drive the sampling loop, summarize.

One Monitor drives one run from a single logical control loop. Ticks are
scheduled fixed-delay against the previous tick's *scheduled* time, so
slow sampling work never accumulates drift; a tick that overruns its
slot fires immediately once and the schedule re-anchors.
"""

from __future__ import annotations

import logging
import os
import subprocess
import time
from dataclasses import dataclass, field

from . import procfs
from .cpu import CpuTimes, cpu_percent
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
)
from .output import Format, RecordSink, SinkDescriptor, encode_summary, open_sink
from .schedule import SamplingPolicy, next_interval

log = logging.getLogger(__name__)

# Granularity of target-exit polling between scheduled ticks. Bounds how
# long a finished target keeps the loop alive without affecting the
# sampling schedule itself.
_EXIT_POLL_S = 0.025


@dataclass(frozen=True)
class CommandTarget:
    """Spawn this argv (exec-style, no shell) and monitor it."""

    argv: list[str]


@dataclass(frozen=True)
class PidTarget:
    """Attach to an already-running process."""

    pid: int


@dataclass(frozen=True)
class MonitorConfig:
    target: CommandTarget | PidTarget
    policy: SamplingPolicy = field(default_factory=SamplingPolicy.adaptive)
    include_children: bool = True
    duration_cap_ms: int | None = None
    store_in_memory: bool = False
    output: SinkDescriptor | None = None
    format: Format = Format.JSONL
    quiet: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.target, CommandTarget) and not self.target.argv:
            raise ConfigError("command target needs at least one argv token")
        if isinstance(self.target, PidTarget) and self.target.pid <= 0:
            raise ConfigError(f"pid must be positive, got {self.target.pid}")
        if self.duration_cap_ms is not None and self.duration_cap_ms < 1:
            raise ConfigError("duration cap must be >= 1 ms")
        if self.output is not None and self.output.format is not self.format:
            raise ConfigError("sink format disagrees with configured format")


@dataclass(frozen=True)
class Sample:
    """One tree-aggregated metrics record, the unit streamed to output."""

    ts_ms: int
    elapsed_ms: int
    cpu_percent: float
    mem_rss_bytes: int
    mem_vms_bytes: int
    disk_read_bytes_delta: int
    disk_write_bytes_delta: int
    thread_count: int
    child_process_count: int
    per_core_util: list[float] | None = None
    gpu_mem_bytes: int | None = None
    gpu_util_percent: float | None = None


@dataclass(frozen=True)
class RunMetadata:
    """Immutable description of a run, emitted once before any sample."""

    pid: int
    cmdline: list[str]
    exe_path: str | None
    start_ts_ms: int
    strategy: str


@dataclass(frozen=True)
class ExitStatus:
    """How the target ended, if that is knowable for this run."""

    code: int | None = None
    signal: int | None = None


@dataclass(frozen=True)
class Summary:
    sample_count: int
    duration_ms: int
    cpu_avg_percent: float
    cpu_min_percent: float
    cpu_max_percent: float
    peak_rss_bytes: int
    peak_vms_bytes: int
    total_read_bytes: int
    total_write_bytes: int
    max_thread_count: int
    max_child_count: int
    exit_code: int | None = None
    exit_signal: int | None = None


class _SummaryBuilder:
    """Running aggregates so unbounded runs need not retain samples."""

    def __init__(self) -> None:
        self.count = 0
        self.cpu_sum = 0.0
        self.cpu_min = 0.0
        self.cpu_max = 0.0
        self.peak_rss = 0
        self.peak_vms = 0
        self.total_read = 0
        self.total_write = 0
        self.max_threads = 0
        self.max_children = 0

    def add(self, s: Sample) -> None:
        if self.count == 0:
            self.cpu_min = self.cpu_max = s.cpu_percent
        else:
            self.cpu_min = min(self.cpu_min, s.cpu_percent)
            self.cpu_max = max(self.cpu_max, s.cpu_percent)
        self.count += 1
        self.cpu_sum += s.cpu_percent
        self.peak_rss = max(self.peak_rss, s.mem_rss_bytes)
        self.peak_vms = max(self.peak_vms, s.mem_vms_bytes)
        self.total_read += s.disk_read_bytes_delta
        self.total_write += s.disk_write_bytes_delta
        self.max_threads = max(self.max_threads, s.thread_count)
        self.max_children = max(self.max_children, s.child_process_count)

    def build(self, exit_status: ExitStatus, duration_ms: int) -> Summary:
        return Summary(
            sample_count=self.count,
            duration_ms=duration_ms,
            cpu_avg_percent=self.cpu_sum / self.count if self.count else 0.0,
            cpu_min_percent=self.cpu_min,
            cpu_max_percent=self.cpu_max,
            peak_rss_bytes=self.peak_rss,
            peak_vms_bytes=self.peak_vms,
            total_read_bytes=self.total_read,
            total_write_bytes=self.total_write,
            max_thread_count=self.max_threads,
            max_child_count=self.max_children,
            exit_code=exit_status.code,
            exit_signal=exit_status.signal,
        )


def summarize(
    samples: list[Sample], exit_status: ExitStatus, duration_ms: int
) -> Summary:
    """Aggregate statistics over a run's samples.

    An empty sample sequence yields zeroed statistics with sample_count 0.
    """
    builder = _SummaryBuilder()
    for sample in samples:
        builder.add(sample)
    return builder.build(exit_status, duration_ms)


class Monitor:
    """Handle for one monitored run; create with Monitor.start()."""

    def __init__(
        self,
        config: MonitorConfig,
        proc: subprocess.Popen | None,
        root_pid: int,
        root_starttime: int,
        metadata: RunMetadata,
        sink: RecordSink | None,
        t0_monotonic: float,
    ):
        self.config = config
        self.metadata = metadata
        self.root_pid = root_pid
        self.samples: list[Sample] = []
        self.summary: Summary | None = None
        self._proc = proc
        self._root_starttime = root_starttime
        self._sink = sink
        self._sink_error: OutputError | None = None
        self._t0 = t0_monotonic
        self._cpu_prev: dict[int, CpuTimes] = {}
        self._io_prev: dict[int, procfs.IoCounters] = {}
        self._io_warned: set[int] = set()
        self._prev_elapsed = -1
        self._finished = False
        self._builder = _SummaryBuilder()

    @classmethod
    def start(cls, config: MonitorConfig) -> "Monitor":
        """Spawn or attach per the config and begin the monitoring clock.

        The spawned child inherits this process's standard streams; its
        I/O is never captured or disturbed.
        """
        sink = open_sink(config.output) if config.output is not None else None
        proc: subprocess.Popen | None = None
        try:
            if isinstance(config.target, CommandTarget):
                argv = config.target.argv
                try:
                    proc = subprocess.Popen(argv)
                except FileNotFoundError as exc:
                    raise SpawnFailed(
                        f"no such executable: {argv[0]}", exc.errno
                    ) from exc
                except PermissionError as exc:
                    raise SpawnFailed(f"not executable: {argv[0]}", exc.errno) from exc
                except OSError as exc:
                    raise SpawnFailed(
                        f"cannot execute {argv[0]}: {exc}", exc.errno
                    ) from exc
                root_pid = proc.pid
                cmdline = list(argv)
                try:
                    exe_path = os.readlink(f"{procfs.PROC_ROOT}/{root_pid}/exe")
                except OSError:
                    exe_path = None
            else:
                root_pid = config.target.pid
                try:
                    identity = procfs.read_identity(root_pid)
                except ProcessGone as exc:
                    raise NoSuchProcess(f"no process with pid {root_pid}") from exc
                cmdline = identity.cmdline
                exe_path = identity.exe_path

            try:
                root_starttime = procfs.read_raw_stat(root_pid).starttime_ticks
            except ProcessGone as exc:
                if proc is None:
                    raise NoSuchProcess(f"no process with pid {root_pid}") from exc
                # The spawned child exited and was somehow reaped already;
                # fall back to a baseline that can never be revalidated away.
                root_starttime = -1
        except ProcwatchError:
            if sink is not None:
                sink.close()
            raise

        monitor = cls(
            config=config,
            proc=proc,
            root_pid=root_pid,
            root_starttime=root_starttime,
            metadata=RunMetadata(
                pid=root_pid,
                cmdline=cmdline,
                exe_path=exe_path,
                start_ts_ms=int(time.time() * 1000),
                strategy=_strategy_string(config),
            ),
            sink=sink,
            t0_monotonic=time.monotonic(),
        )
        # Anchor the root's I/O baseline at monitoring start so bytes
        # moved before the first tick are charged to the run. A spawned
        # child's counters begin at zero; an attach target's pre-attach
        # I/O is excluded by baselining at its current cumulative value.
        if proc is not None:
            monitor._io_prev[root_pid] = procfs.IoCounters(0, 0)
        else:
            baseline = monitor._read_io_tolerant(root_pid)
            if baseline is not None:
                monitor._io_prev[root_pid] = baseline
        monitor._emit("metadata", monitor.metadata)
        return monitor

    def sample_once(self) -> Sample:
        """Read the root (and, when configured, its descendant tree) once.

        Raises TargetExited when the root record is gone or its pid has
        been recycled; a zombie root still yields its frozen counters.
        """
        now_ms = time.monotonic() * 1000.0
        try:
            root_stat = procfs.read_raw_stat(self.root_pid)
        except ProcessGone as exc:
            raise TargetExited(f"pid {self.root_pid} exited") from exc
        if self._root_starttime >= 0 and root_stat.starttime_ticks != self._root_starttime:
            raise TargetExited(f"pid {self.root_pid} was recycled")

        stats: dict[int, procfs.RawProcessStat] = {self.root_pid: root_stat}
        if self.config.include_children:
            for pid in sorted(procfs.child_pids(self.root_pid, recursive=True)):
                try:
                    stats[pid] = procfs.read_raw_stat(pid)
                except (ProcessGone, PermissionDenied, ParseError):
                    continue  # vanished mid-scan

        cpu_total = 0.0
        rss = vms = threads = 0
        read_delta = write_delta = 0
        cpu_now: dict[int, CpuTimes] = {}
        io_now: dict[int, procfs.IoCounters] = {}
        for pid, st in stats.items():
            rss += st.rss_bytes
            vms += st.vsize_bytes
            threads += st.num_threads
            current = CpuTimes(st.utime_ticks + st.stime_ticks, now_ms)
            previous = self._cpu_prev.get(pid)
            if previous is not None:
                try:
                    cpu_total += cpu_percent(previous, current)
                except InvalidWindow:
                    pass
            cpu_now[pid] = current

            # Zombie children hold no I/O state worth charging; the root
            # is always read so its final counters are captured.
            if st.state == "Z" and pid != self.root_pid:
                continue
            io = self._read_io_tolerant(pid)
            if io is None:
                continue
            io_prev = self._io_prev.get(pid)
            if io_prev is not None:
                read_delta += max(0, io.read_bytes_cum - io_prev.read_bytes_cum)
                write_delta += max(0, io.write_bytes_cum - io_prev.write_bytes_cum)
            io_now[pid] = io

        self._cpu_prev = cpu_now
        self._io_prev = io_now
        elapsed = max(int(now_ms - self._t0 * 1000.0), self._prev_elapsed + 1)
        self._prev_elapsed = elapsed
        return Sample(
            ts_ms=int(time.time() * 1000),
            elapsed_ms=elapsed,
            cpu_percent=cpu_total,
            mem_rss_bytes=rss,
            mem_vms_bytes=vms,
            disk_read_bytes_delta=read_delta,
            disk_write_bytes_delta=write_delta,
            thread_count=threads,
            child_process_count=len(stats) - 1 if self.config.include_children else 0,
        )

    def run_to_completion(self, on_sample=None) -> Summary:
        """Sample, emit and sleep until the target ends or the cap fires.

        Metadata and a summary are emitted even when the target exits
        before the first tick. Sink write failures stop structured
        output but not the run; they re-raise as OutputError after the
        summary has been logged to the error channel.
        """
        if self._finished:
            raise ProcwatchError("this run already completed")
        policy = self.config.policy
        t0 = self._t0
        deadline = (
            t0 + self.config.duration_cap_ms / 1000.0
            if self.config.duration_cap_ms is not None
            else None
        )
        due = t0 + next_interval(policy, 0.0) / 1000.0
        target_exited = False
        while True:
            now = time.monotonic()
            if deadline is not None and now >= deadline:
                break
            if self._target_exited():
                target_exited = True
                self._final_sample(on_sample)
                break
            if now >= due:
                try:
                    sample = self.sample_once()
                except TargetExited:
                    target_exited = True
                    break
                self._record(sample, on_sample)
                due += next_interval(policy, (due - t0) * 1000.0) / 1000.0
                if due < now:
                    due = now  # overran the slot: fire immediately once
                continue
            sleep_for = due - now
            if deadline is not None:
                sleep_for = min(sleep_for, deadline - now)
            time.sleep(min(_EXIT_POLL_S, max(sleep_for, 0.0)))

        exit_status = self._reap(target_exited)
        duration_ms = int((time.monotonic() - t0) * 1000.0)
        self.summary = self._builder.build(exit_status, duration_ms)
        self._emit("summary", self.summary)
        self._finished = True
        if self._sink is not None:
            self._sink.close()
        if self._sink_error is not None:
            log.error(
                "run summary (sink was lost): %s",
                encode_summary(self.summary, Format.JSONL),
            )
            raise self._sink_error
        return self.summary

    # -- internals ----------------------------------------------------

    def _read_io_tolerant(self, pid: int) -> procfs.IoCounters | None:
        try:
            return procfs.read_io(pid)
        except (ProcessGone, ParseError):
            return None
        except PermissionDenied:
            if pid not in self._io_warned:
                self._io_warned.add(pid)
                log.warning(
                    "io counters for pid %d are not readable; "
                    "reporting zero I/O for it",
                    pid,
                )
            return None

    def _target_exited(self) -> bool:
        if self._proc is not None:
            if self._proc.returncode is not None:
                return True
            try:
                res = os.waitid(
                    os.P_PID, self.root_pid, os.WEXITED | os.WNOHANG | os.WNOWAIT
                )
            except ChildProcessError:
                return True
            return res is not None
        try:
            st = procfs.read_raw_stat(self.root_pid)
        except (ProcessGone, PermissionDenied, ParseError):
            return True
        if self._root_starttime >= 0 and st.starttime_ticks != self._root_starttime:
            return True
        return st.state == "Z"

    def _final_sample(self, on_sample) -> None:
        # One last reading before the zombie is reaped captures CPU time
        # and I/O accumulated since the previous scheduled tick.
        try:
            sample = self.sample_once()
        except ProcwatchError:
            return
        self._record(sample, on_sample)

    def _record(self, sample: Sample, on_sample) -> None:
        self._builder.add(sample)
        if self.config.store_in_memory:
            self.samples.append(sample)
        self._emit("sample", sample)
        if on_sample is not None:
            on_sample(sample)

    def _emit(self, kind: str, record) -> None:
        if self._sink is None:
            return
        try:
            getattr(self._sink, f"write_{kind}")(record)
        except OutputError as exc:
            self._sink_error = exc
            self._sink = None
            log.error("sink write failed; monitoring continues: %s", exc)

    def _reap(self, target_exited: bool) -> ExitStatus:
        if self._proc is None:
            return ExitStatus()
        if target_exited:
            rc = self._proc.wait()
        else:
            # Duration cap fired while the child still runs: detach and
            # leave it alone (we never signal the target).
            rc = self._proc.poll()
            if rc is None:
                return ExitStatus()
        if rc < 0:
            return ExitStatus(signal=-rc)
        return ExitStatus(code=rc)


def _strategy_string(config: MonitorConfig) -> str:
    parts = [config.policy.describe()]
    if config.duration_cap_ms is not None:
        parts.append(f"--duration {config.duration_cap_ms / 1000:g}")
    if not config.include_children:
        parts.append("--no-include-children")
    return " ".join(parts)
