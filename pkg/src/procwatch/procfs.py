"""Reading and parsing per-process counters from the /proc filesystem.

All readers are stateless single-file reads; they either return a fully
parsed value or raise, never a partial record.
"""

from __future__ import annotations

import errno
import os
from dataclasses import dataclass

from .errors import ParseError, PermissionDenied, ProcessGone

PROC_ROOT = "/proc"

_PAGE_SIZE = os.sysconf("SC_PAGE_SIZE")

# Field positions in /proc/<pid>/stat, 0-indexed into the space-separated
# tail that follows the ")" closing the comm field (state is index 0).
_F_STATE = 0
_F_PPID = 1
_F_UTIME = 11
_F_STIME = 12
_F_NUM_THREADS = 17
_F_STARTTIME = 19
_F_VSIZE = 20
_F_RSS = 21


@dataclass(frozen=True)
class RawProcessStat:
    """One process's raw counters as read from /proc/<pid>/stat."""

    pid: int
    comm: str
    state: str
    ppid: int
    utime_ticks: int
    stime_ticks: int
    num_threads: int
    starttime_ticks: int
    vsize_bytes: int
    rss_bytes: int


@dataclass(frozen=True)
class IoCounters:
    """Cumulative I/O byte counters for one process.

    Sourced from the syscall-level counters in /proc/<pid>/io (rchar/wchar),
    which monotonically accumulate all bytes moved through read/write
    syscalls. Per-interval deltas are computed by the monitor.
    """

    read_bytes_cum: int
    write_bytes_cum: int


@dataclass(frozen=True)
class ProcessIdentity:
    """Launch identity of a process: pid, argv and executable path."""

    pid: int
    cmdline: list[str]
    exe_path: str | None


def _raise_for_oserror(exc: OSError, pid: int) -> None:
    if isinstance(exc, (FileNotFoundError, ProcessLookupError)):
        raise ProcessGone(f"pid {pid} is gone") from exc
    if isinstance(exc, PermissionError):
        raise PermissionDenied(f"pid {pid}: {exc}") from exc
    if exc.errno == errno.ESRCH:
        raise ProcessGone(f"pid {pid} is gone") from exc
    raise exc


def parse_stat(text: str) -> RawProcessStat:
    """Parse the content of a /proc/<pid>/stat entry.

    Total over arbitrary input: returns a value or raises ParseError.
    The comm field may contain spaces, parentheses and other hostile
    bytes, so it is delimited by the first "(" and the LAST ")".
    """
    lparen = text.find("(")
    rparen = text.rfind(")")
    if lparen == -1 or rparen == -1 or rparen < lparen:
        raise ParseError("stat line lacks a parenthesized comm field")
    try:
        pid = int(text[:lparen].strip())
    except ValueError as exc:
        raise ParseError(f"bad pid field: {text[:lparen]!r}") from exc
    comm = text[lparen + 1 : rparen]
    rest = text[rparen + 1 :].split()
    if len(rest) <= _F_RSS:
        raise ParseError(f"stat line has only {len(rest)} fields after comm")
    state = rest[_F_STATE]
    if len(state) != 1 or not state.isalpha():
        raise ParseError(f"bad state field: {state!r}")
    try:
        ppid = int(rest[_F_PPID])
        utime = int(rest[_F_UTIME])
        stime = int(rest[_F_STIME])
        num_threads = int(rest[_F_NUM_THREADS])
        starttime = int(rest[_F_STARTTIME])
        vsize = int(rest[_F_VSIZE])
        rss_pages = int(rest[_F_RSS])
    except ValueError as exc:
        raise ParseError(f"non-numeric stat field: {exc}") from exc
    return RawProcessStat(
        pid=pid,
        comm=comm,
        state=state,
        ppid=ppid,
        utime_ticks=utime,
        stime_ticks=stime,
        num_threads=num_threads,
        starttime_ticks=starttime,
        vsize_bytes=vsize,
        rss_bytes=rss_pages * _PAGE_SIZE,
    )


def read_raw_stat(pid: int) -> RawProcessStat:
    """Read and parse /proc/<pid>/stat.

    Raises ProcessGone if the entry vanished, PermissionDenied on access
    refusal, ParseError if the line violates the documented layout.
    """
    try:
        with open(f"{PROC_ROOT}/{pid}/stat", "rb") as f:
            raw = f.read()
    except OSError as exc:
        _raise_for_oserror(exc, pid)
    return parse_stat(raw.decode("latin-1"))


def read_io(pid: int) -> IoCounters:
    """Read cumulative I/O byte counters from /proc/<pid>/io."""
    try:
        with open(f"{PROC_ROOT}/{pid}/io", "rb") as f:
            raw = f.read()
    except OSError as exc:
        _raise_for_oserror(exc, pid)
    read_cum = 0
    write_cum = 0
    try:
        for line in raw.decode("latin-1").splitlines():
            if line.startswith("rchar:"):
                read_cum = int(line.split(":", 1)[1])
            elif line.startswith("wchar:"):
                write_cum = int(line.split(":", 1)[1])
    except ValueError as exc:
        raise ParseError(f"pid {pid}: malformed io entry") from exc
    return IoCounters(read_bytes_cum=read_cum, write_bytes_cum=write_cum)


def read_identity(pid: int) -> ProcessIdentity:
    """Read a process's command line and executable path.

    cmdline is split on NUL separators preserving argument order; it is
    empty for kernel threads and zombies. exe_path is None whenever the
    kernel's executable symlink cannot be resolved.
    """
    try:
        with open(f"{PROC_ROOT}/{pid}/cmdline", "rb") as f:
            raw = f.read()
    except OSError as exc:
        _raise_for_oserror(exc, pid)
    cmdline = [arg.decode("utf-8", "replace") for arg in raw.split(b"\x00") if arg]
    try:
        exe_path = os.readlink(f"{PROC_ROOT}/{pid}/exe")
    except OSError:
        exe_path = None
    return ProcessIdentity(pid=pid, cmdline=cmdline, exe_path=exe_path)


def list_pids() -> list[int]:
    """All numeric entries of the process table, unordered."""
    try:
        names = os.listdir(PROC_ROOT)
    except OSError:
        return []
    return [int(n) for n in names if n.isdigit()]


def child_pids(root: int, recursive: bool = True) -> set[int]:
    """Pids whose parent chain reaches ``root`` (excluding root itself).

    When recursive is false, only direct children. The process table is
    scanned fresh on every call; entries that vanish mid-scan or cannot
    be read are silently skipped.
    """
    parent_of: dict[int, int] = {}
    for pid in list_pids():
        if pid == root:
            continue
        try:
            parent_of[pid] = read_raw_stat(pid).ppid
        except (ProcessGone, PermissionDenied, ParseError):
            continue
    direct = {pid for pid, ppid in parent_of.items() if ppid == root}
    if not recursive:
        return direct
    found = set(direct)
    frontier = direct
    while frontier:
        frontier = {
            pid
            for pid, ppid in parent_of.items()
            if ppid in frontier and pid not in found
        }
        found |= frontier
    return found
