"""Shared workloads and independent oracles for the test suite."""

from __future__ import annotations

import json
import os
import subprocess
import sys
import textwrap
import time

import pytest

PY = sys.executable


def py_argv(code: str) -> list[str]:
    return [PY, "-c", textwrap.dedent(code)]


def busy_argv(seconds: float) -> list[str]:
    """A single-threaded CPU-bound loop running for about `seconds`."""
    return py_argv(
        f"""
        import time
        end = time.monotonic() + {seconds}
        while time.monotonic() < end:
            pass
        """
    )


def allocator_argv(mib: int, hold_seconds: float) -> list[str]:
    """Allocate and touch `mib` MiB, then hold it for `hold_seconds`."""
    return py_argv(
        f"""
        import time
        block = bytearray({mib} * 1024 * 1024)
        for i in range(0, len(block), 4096):
            block[i] = 1
        time.sleep({hold_seconds})
        """
    )


def writer_argv(path: str, mib: int, pre_sleep: float = 0.0) -> list[str]:
    """Write `mib` MiB to `path` with a durable flush, then exit."""
    return py_argv(
        f"""
        import os, time
        time.sleep({pre_sleep})
        with open({path!r}, "wb") as f:
            for _ in range({mib}):
                f.write(b"\\0" * (1024 * 1024))
            f.flush()
            os.fsync(f.fileno())
        """
    )


def threads_argv(thread_count: int, hold_seconds: float) -> list[str]:
    """Run with exactly `thread_count` threads for `hold_seconds`."""
    return py_argv(
        f"""
        import threading, time
        for _ in range({thread_count} - 1):
            threading.Thread(target=time.sleep, args=({hold_seconds},), daemon=True).start()
        time.sleep({hold_seconds})
        """
    )


def sleeping_children_argv(child_count: int, hold_seconds: float) -> list[str]:
    """Parent that spawns `child_count` sleeping children and waits."""
    return py_argv(
        f"""
        import subprocess, time
        kids = [subprocess.Popen(["sleep", str({hold_seconds})]) for _ in range({child_count})]
        time.sleep({hold_seconds})
        for k in kids:
            k.wait()
        """
    )


def busy_children_argv(child_count: int, seconds: float) -> list[str]:
    """Idle parent spawning `child_count` busy-loop children."""
    busy = (
        "import time\n"
        f"end = time.monotonic() + {seconds}\n"
        "while time.monotonic() < end:\n"
        "    pass\n"
    )
    return py_argv(
        f"""
        import subprocess, sys, time
        kids = [subprocess.Popen([sys.executable, "-c", {busy!r}]) for _ in range({child_count})]
        for k in kids:
            k.wait()
        """
    )


def chain_argv(hold_seconds: float) -> list[str]:
    """parent -> child -> grandchild chain, all alive `hold_seconds`."""
    grandchild = f"import time; time.sleep({hold_seconds})"
    child = (
        "import subprocess, sys, time\n"
        f"g = subprocess.Popen([sys.executable, '-c', {grandchild!r}])\n"
        f"time.sleep({hold_seconds})\n"
        "g.wait()\n"
    )
    return py_argv(
        f"""
        import subprocess, sys, time
        c = subprocess.Popen([sys.executable, "-c", {child!r}])
        time.sleep({hold_seconds})
        c.wait()
        """
    )


@pytest.fixture
def spawn():
    """Spawn helper that guarantees cleanup of leftover processes."""
    procs: list[subprocess.Popen] = []

    def _spawn(argv: list[str], **kwargs) -> subprocess.Popen:
        proc = subprocess.Popen(argv, **kwargs)
        procs.append(proc)
        return proc

    yield _spawn
    for proc in procs:
        if proc.poll() is None:
            proc.kill()
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass


def wait_for(predicate, timeout: float = 5.0, interval: float = 0.02) -> None:
    """Poll until `predicate()` is true or fail the test."""
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return
        time.sleep(interval)
    pytest.fail("condition not reached within timeout")


# -- independent process-tree oracle (status-file PPid scan) ----------


def oracle_ppid(pid: int) -> int | None:
    try:
        with open(f"/proc/{pid}/status") as f:
            for line in f:
                if line.startswith("PPid:"):
                    return int(line.split(":", 1)[1])
    except OSError:
        return None
    return None


def oracle_direct_children(root: int) -> set[int]:
    out = set()
    for name in os.listdir("/proc"):
        if not name.isdigit():
            continue
        pid = int(name)
        if pid != root and oracle_ppid(pid) == root:
            out.add(pid)
    return out


def oracle_descendants(root: int) -> set[int]:
    out: set[int] = set()
    frontier = oracle_direct_children(root)
    while frontier:
        out |= frontier
        frontier = set().union(*(oracle_direct_children(p) for p in frontier)) - out
    return out


# -- record stream helpers --------------------------------------------


def parse_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line]


def steady_state(samples: list, min_elapsed_ms: int = 500) -> list:
    """Drop startup samples so means reflect the settled workload."""
    get = lambda s: s["elapsed_ms"] if isinstance(s, dict) else s.elapsed_ms
    return [s for s in samples if get(s) >= min_elapsed_ms]
