"""Command-line front end.

Grammar: global flags come before the subcommand; everything after
``run`` is the target command verbatim (never interpreted as flags).

    procwatch [--interval MS] [--max-interval MS] [--duration S]
              [--json] [--out PATH] [--quiet] [--no-include-children]
              run <cmd...> | attach <pid>
"""

from __future__ import annotations

import argparse
import errno
import logging
import os
import sys
from dataclasses import dataclass

from .errors import (
    ConfigError,
    NoSuchProcess,
    OutputError,
    PermissionDenied,
    SpawnFailed,
    UsageError,
)
from .monitor import CommandTarget, Monitor, MonitorConfig, PidTarget
from .output import Format, SinkDescriptor, render_human
from .schedule import DEFAULT_BASE_INTERVAL_MS, DEFAULT_MAX_INTERVAL_MS, SamplingPolicy

log = logging.getLogger(__name__)

USAGE_EXIT_STATUS = 2


@dataclass(frozen=True)
class CliInvocation:
    target: CommandTarget | PidTarget
    interval_ms: int | None = None
    max_interval_ms: int | None = None
    duration_s: float | None = None
    json: bool = False
    out_path: str | None = None
    quiet: bool = False
    no_include_children: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would sys.exit; raise instead
        raise UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="procwatch", allow_abbrev=False)
    parser.add_argument("--interval", type=int, metavar="MS")
    parser.add_argument("--max-interval", type=int, metavar="MS")
    parser.add_argument("--duration", type=float, metavar="S")
    parser.add_argument("--json", action="store_true")
    parser.add_argument("--out", metavar="PATH")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--no-include-children", action="store_true")
    sub = parser.add_subparsers(dest="subcommand")
    run = sub.add_parser("run", prog="procwatch run", add_help=False)
    run.add_argument("command", nargs=argparse.REMAINDER)
    attach = sub.add_parser("attach", prog="procwatch attach")
    attach.add_argument("pid", type=int)
    return parser


def parse_args(argv: list[str]) -> CliInvocation:
    """Parse a full CLI token list; raises UsageError with a synopsis."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        parser.error("a subcommand is required: run <cmd...> | attach <pid>")
    if ns.interval is not None and ns.interval < 1:
        parser.error("--interval must be a positive number of milliseconds")
    if ns.max_interval is not None and ns.max_interval < 1:
        parser.error("--max-interval must be a positive number of milliseconds")
    if ns.duration is not None and ns.duration <= 0:
        parser.error("--duration must be a positive number of seconds")
    if ns.subcommand == "run":
        if not ns.command:
            parser.error("run requires a command to execute")
        target: CommandTarget | PidTarget = CommandTarget(list(ns.command))
    else:
        if ns.pid < 1:
            parser.error("attach requires a positive pid")
        target = PidTarget(ns.pid)
    return CliInvocation(
        target=target,
        interval_ms=ns.interval,
        max_interval_ms=ns.max_interval,
        duration_s=ns.duration,
        json=ns.json,
        out_path=ns.out,
        quiet=ns.quiet,
        no_include_children=ns.no_include_children,
    )


def resolve_config(inv: CliInvocation) -> MonitorConfig:
    """Turn a parsed invocation into a monitor configuration.

    Only --interval: fixed-rate sampling at that interval. Only
    --max-interval: adaptive from the default base. Both: adaptive over
    that range (contradictory bounds are a ConfigError). Neither: the
    default adaptive schedule.
    """
    if inv.interval_ms is not None and inv.max_interval_ms is not None:
        policy = SamplingPolicy.adaptive(inv.interval_ms, inv.max_interval_ms)
    elif inv.interval_ms is not None:
        policy = SamplingPolicy.fixed(inv.interval_ms)
    elif inv.max_interval_ms is not None:
        policy = SamplingPolicy.adaptive(
            DEFAULT_BASE_INTERVAL_MS, inv.max_interval_ms
        )
    else:
        policy = SamplingPolicy.adaptive(
            DEFAULT_BASE_INTERVAL_MS, DEFAULT_MAX_INTERVAL_MS
        )
    if inv.out_path is not None:
        output = SinkDescriptor(inv.out_path, Format.JSONL)
    elif inv.json:
        output = SinkDescriptor(None, Format.JSONL)
    else:
        output = None
    return MonitorConfig(
        target=inv.target,
        policy=policy,
        include_children=not inv.no_include_children,
        duration_cap_ms=int(round(inv.duration_s * 1000)) if inv.duration_s else None,
        store_in_memory=False,
        output=output,
        format=Format.JSONL,
        quiet=inv.quiet,
    )


def _color_enabled() -> bool:
    if os.environ.get("NO_COLOR"):
        return False
    if os.environ.get("TERM") == "dumb":
        return False
    return sys.stdout.isatty()


def main(argv: list[str] | None = None) -> int:
    """Run the CLI; returns the process exit status.

    Run targets pass their exit status through (128+N for signal
    deaths); attach runs that detach cleanly exit 0; usage and config
    errors exit 2.
    """
    if argv is None:
        argv = sys.argv[1:]
    logging.basicConfig(
        level=logging.WARNING, format="procwatch: %(levelname)s: %(message)s"
    )
    try:
        inv = parse_args(argv)
        config = resolve_config(inv)
    except (UsageError, ConfigError) as exc:
        print(f"procwatch: error: {exc}", file=sys.stderr)
        return USAGE_EXIT_STATUS

    # Human rendering is only wired when it cannot contaminate the
    # record stream: never when records themselves go to stdout.
    records_to_stdout = config.output is not None and config.output.path is None
    human = not config.quiet and not records_to_stdout
    on_sample = None
    if human:
        color = _color_enabled()

        def on_sample(sample):
            print(render_human(sample, color), flush=True)

    try:
        monitor = Monitor.start(config)
    except SpawnFailed as exc:
        print(f"procwatch: error: {exc}", file=sys.stderr)
        return 127 if exc.errno == errno.ENOENT else 126
    except (NoSuchProcess, PermissionDenied, OutputError) as exc:
        print(f"procwatch: error: {exc}", file=sys.stderr)
        return 1

    try:
        summary = monitor.run_to_completion(on_sample=on_sample)
    except OutputError as exc:
        print(f"procwatch: error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("procwatch: interrupted", file=sys.stderr)
        return 130

    if isinstance(config.target, CommandTarget):
        if summary.exit_signal is not None:
            return 128 + summary.exit_signal
        if summary.exit_code is not None:
            return summary.exit_code
    return 0


def run_main() -> None:
    """Console-script entry point."""
    sys.exit(main())
