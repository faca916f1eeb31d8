"""CLI grammar, config resolution, exit-status pass-through."""

import subprocess
import sys

import pytest

from procwatch.cli import CliInvocation, main, parse_args, resolve_config
from procwatch.errors import ConfigError, UsageError
from procwatch.monitor import CommandTarget, PidTarget
from procwatch.schedule import Mode

from conftest import parse_jsonl, py_argv

CLI = [sys.executable, "-m", "procwatch"]


def test_parse_plain_run():
    inv = parse_args(["run", "sleep", "5"])
    assert inv.target == CommandTarget(["sleep", "5"])
    assert inv.interval_ms is None
    assert inv.max_interval_ms is None
    assert not inv.json and not inv.quiet and not inv.no_include_children


def test_parse_max_interval():
    inv = parse_args(["--max-interval", "2000", "run", "sleep", "5"])
    assert inv.max_interval_ms == 2000
    assert inv.target == CommandTarget(["sleep", "5"])


def test_parse_quiet_json_out():
    inv = parse_args(
        ["--quiet", "--json", "--out", "metrics.jsonl", "run", "python", "script.py"]
    )
    assert inv.quiet and inv.json
    assert inv.out_path == "metrics.jsonl"
    assert inv.target == CommandTarget(["python", "script.py"])


def test_parse_attach():
    inv = parse_args(["--duration", "10", "attach", "1234"])
    assert inv.target == PidTarget(1234)
    assert inv.duration_s == 10.0


def test_parse_non_numeric_pid_rejected():
    with pytest.raises(UsageError):
        parse_args(["attach", "abc"])


def test_parse_errors():
    for argv in (
        [],
        ["run"],
        ["--interval", "x", "run", "true"],
        ["--interval", "0", "run", "true"],
        ["--duration", "-1", "run", "true"],
        ["--bogus", "run", "true"],
        ["attach", "-4"],
    ):
        with pytest.raises(UsageError):
            parse_args(argv)


def test_flags_after_run_belong_to_target():
    inv = parse_args(["run", "mytool", "--interval", "9"])
    assert inv.target == CommandTarget(["mytool", "--interval", "9"])
    assert inv.interval_ms is None


def test_resolve_interval_only_is_fixed():
    config = resolve_config(parse_args(["--interval", "500", "run", "sleep", "5"]))
    assert config.policy.mode is Mode.FIXED
    assert config.policy.base_interval_ms == 500


def test_resolve_max_only_is_adaptive_from_default_base():
    config = resolve_config(parse_args(["--max-interval", "2000", "run", "x"]))
    assert config.policy.mode is Mode.ADAPTIVE
    assert config.policy.base_interval_ms == 100
    assert config.policy.max_interval_ms == 2000


def test_resolve_both_intervals():
    config = resolve_config(
        parse_args(["--interval", "250", "--max-interval", "4000", "run", "x"])
    )
    assert config.policy.mode is Mode.ADAPTIVE
    assert config.policy.base_interval_ms == 250
    assert config.policy.max_interval_ms == 4000


def test_resolve_defaults():
    config = resolve_config(parse_args(["run", "x"]))
    assert config.policy.mode is Mode.ADAPTIVE
    assert config.policy.base_interval_ms == 100
    assert config.policy.max_interval_ms == 1000
    assert config.include_children
    assert config.output is None


def test_resolve_contradictory_bounds():
    with pytest.raises(ConfigError):
        resolve_config(
            parse_args(["--interval", "500", "--max-interval", "200", "run", "x"])
        )


def test_resolve_no_include_children_inverts():
    config = resolve_config(parse_args(["--no-include-children", "run", "x"]))
    assert not config.include_children


def test_resolve_duration_converts_to_ms():
    config = resolve_config(parse_args(["--duration", "2.5", "attach", "1"]))
    assert config.duration_cap_ms == 2500


def test_resolve_sink_selection():
    to_stdout = resolve_config(parse_args(["--json", "run", "x"]))
    assert to_stdout.output is not None and to_stdout.output.path is None
    to_file = resolve_config(parse_args(["--out", "m.jsonl", "run", "x"]))
    assert to_file.output is not None and to_file.output.path == "m.jsonl"
    human_only = resolve_config(parse_args(["run", "x"]))
    assert human_only.output is None


def render_back(inv: CliInvocation) -> list[str]:
    argv = []
    if inv.interval_ms is not None:
        argv += ["--interval", str(inv.interval_ms)]
    if inv.max_interval_ms is not None:
        argv += ["--max-interval", str(inv.max_interval_ms)]
    if inv.duration_s is not None:
        argv += ["--duration", f"{inv.duration_s:g}"]
    if inv.json:
        argv.append("--json")
    if inv.out_path is not None:
        argv += ["--out", inv.out_path]
    if inv.quiet:
        argv.append("--quiet")
    if inv.no_include_children:
        argv.append("--no-include-children")
    if isinstance(inv.target, CommandTarget):
        argv += ["run", *inv.target.argv]
    else:
        argv += ["attach", str(inv.target.pid)]
    return argv


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "sleep", "5"],
        ["--json", "run", "sleep", "5"],
        ["--interval", "500", "run", "sleep", "5"],
        ["--max-interval", "2000", "run", "sleep", "5"],
        ["attach", "1234"],
        ["--duration", "10", "attach", "1234"],
        ["--quiet", "--json", "--out", "metrics.jsonl", "run", "python", "script.py"],
        ["--no-include-children", "run", "python", "multi_process_script.py"],
    ],
)
def test_parse_render_back_is_lossless(argv):
    inv = parse_args(argv)
    assert parse_args(render_back(inv)) == inv


def test_main_run_true_exits_zero(capsys):
    assert main(["--quiet", "run", "true"]) == 0


def test_main_exit_status_pass_through():
    # oracle: the same command run unmonitored
    direct = subprocess.run(["sh", "-c", "exit 7"]).returncode
    assert direct == 7
    assert main(["--quiet", "run", "sh", "-c", "exit 7"]) == 7


def test_main_usage_error_is_2(capsys):
    assert main(["attach", "abc"]) == 2
    assert main(["--interval", "500", "--max-interval", "20", "run", "x"]) == 2
    err = capsys.readouterr().err
    assert "error" in err


def test_main_missing_binary_is_127(capsys):
    assert main(["--quiet", "run", "/no/such/binary"]) == 127


def test_main_attach_detach_is_0(spawn):
    sleeper = spawn(["sleep", "5"])
    assert main(["--quiet", "--duration", "0.5", "attach", str(sleeper.pid)]) == 0


def test_json_stream_to_stdout_is_pure():
    result = subprocess.run(
        [*CLI, "--json", "run", "sleep", "1"], capture_output=True, text=True
    )
    assert result.returncode == 0
    assert result.stderr == ""
    records = parse_jsonl(result.stdout)
    assert records[0]["type"] == "metadata"
    assert records[-1]["type"] == "summary"
    assert all(r["type"] in {"metadata", "sample", "summary"} for r in records)


def test_signal_death_maps_to_128_plus_signal():
    result = subprocess.run([*CLI, "--quiet", "run", "sh", "-c", "kill -9 $$"])
    assert result.returncode == 128 + 9


def test_quiet_with_file_sink_keeps_terminal_silent(tmp_path):
    out = tmp_path / "m.jsonl"
    result = subprocess.run(
        [*CLI, "--quiet", "--out", str(out), "run", "sleep", "0.5"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout == ""
    assert result.stderr == ""
    records = parse_jsonl(out.read_text())
    assert records[0]["type"] == "metadata"
    assert records[-1]["type"] == "summary"


def test_file_sink_with_human_terminal_view(tmp_path):
    out = tmp_path / "m.jsonl"
    result = subprocess.run(
        [*CLI, "--out", str(out), "run", "sleep", "0.5"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    # human lines on the terminal, structured records in the file
    assert "cpu" in result.stdout
    assert all(not line.startswith("{") for line in result.stdout.splitlines())
    assert parse_jsonl(out.read_text())[-1]["type"] == "summary"


def test_json_with_out_keeps_records_in_file_and_human_on_terminal(tmp_path):
    out = tmp_path / "m.jsonl"
    result = subprocess.run(
        [*CLI, "--json", "--out", str(out), "run", "sleep", "0.5"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert parse_jsonl(out.read_text())[-1]["type"] == "summary"
    assert result.stdout  # live view still renders
    assert all(not line.startswith("{") for line in result.stdout.splitlines())


def test_human_lines_have_no_color_when_not_a_tty():
    result = subprocess.run(
        [*CLI, "run", "sleep", "0.3"], capture_output=True, text=True
    )
    assert "\x1b[" not in result.stdout


def test_target_stdout_passes_through_unmodified(tmp_path):
    payload = py_argv("import sys; sys.stdout.write('x' * 65536)")
    direct = subprocess.run(payload, capture_output=True)
    monitored = subprocess.run(
        [*CLI, "--quiet", "--out", str(tmp_path / "m.jsonl"), "run", *payload],
        capture_output=True,
    )
    assert monitored.stdout == direct.stdout
    assert monitored.returncode == direct.returncode


def test_no_include_children_flag_wires_through(tmp_path):
    out = tmp_path / "m.jsonl"
    result = subprocess.run(
        [
            *CLI,
            "--quiet",
            "--no-include-children",
            "--out",
            str(out),
            "run",
            "sh",
            "-c",
            "sleep 0.6 & sleep 0.6",
        ],
    )
    assert result.returncode == 0
    samples = [r for r in parse_jsonl(out.read_text()) if r["type"] == "sample"]
    assert samples
    assert all(s["child_process_count"] == 0 for s in samples)
