"""CLI surface: run/validate/metrics, determinism, artifacts, exit codes."""

import json
import os

from pidsim.cli import main
from pidsim.scenario import shipped_fixture_path


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _strip_banner(out: str) -> str:
    lines = out.splitlines(keepends=True)
    assert lines and lines[0].startswith("pid-sim ")
    return "".join(lines[1:])


def test_run_fig6_stepped(capsys):
    code, out, err = run_cli(capsys, "run", "fig6_classroom")
    assert code == 0, err
    assert "Inquiry complete; 5 devices discovered" in out
    assert "Number services: 7" in out
    assert "Transfer complete" in out


def test_run_live_test_delivers_seven(capsys):
    code, out, err = run_cli(capsys, "run", "live_test")
    assert code == 0, err
    assert "delivered=7" in out
    assert "outcome=no-ftp-service" in out
    assert "outcome=non-member" in out
    assert "savings pages=357" in out


def test_run_stdout_reproducible(capsys):
    _, out1, _ = run_cli(capsys, "run", "live_test")
    _, out2, _ = run_cli(capsys, "run", "live_test")
    assert _strip_banner(out1) == _strip_banner(out2)


def test_run_seed_flag_overrides(capsys):
    _, out1, _ = run_cli(capsys, "run", "fig6_classroom")
    _, out2, _ = run_cli(capsys, "run", "fig6_classroom", "--seed", "9")
    assert "seed=42" in out1
    assert "seed=9" in out2


def test_env_seed_fallback(capsys, tmp_path, monkeypatch):
    data = json.loads(open(shipped_fixture_path("fig6_classroom")).read())
    del data["seed"]
    path = tmp_path / "noseed.scn"
    path.write_text(json.dumps(data))
    monkeypatch.setenv("PID_SIM_SEED", "123")
    _, out, _ = run_cli(capsys, "run", str(path))
    assert "seed=123" in out
    monkeypatch.delenv("PID_SIM_SEED")
    _, out, _ = run_cli(capsys, "run", str(path))
    assert "seed=0" in out


def test_run_writes_report_and_log(capsys, tmp_path):
    report_dir = tmp_path / "out"
    log_file = tmp_path / "events.log"
    code, out, _ = run_cli(capsys, "run", "live_test",
                           "--report", str(report_dir),
                           "--log", str(log_file))
    assert code == 0
    log_text = log_file.read_text()
    assert log_text == (report_dir / "log.txt").read_text()
    assert log_text.startswith("t=0 seq=0 ev=iteration_started")
    assert all(line.startswith("t=") for line in log_text.splitlines())
    report_text = (report_dir / "report.txt").read_text()
    assert "delivered=7" in report_text
    assert _strip_banner(out) == report_text


def test_run_log_is_byte_identical_across_runs(capsys, tmp_path):
    a, b = tmp_path / "a.log", tmp_path / "b.log"
    run_cli(capsys, "run", "live_test", "--log", str(a))
    run_cli(capsys, "run", "live_test", "--log", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_run_log_matches_frozen_golden_file(capsys, tmp_path):
    golden = os.path.join(os.path.dirname(__file__), "data",
                          "fig6_classroom_seed42.log")
    log = tmp_path / "run.log"
    run_cli(capsys, "run", "fig6_classroom", "--log", str(log))
    assert log.read_bytes() == open(golden, "rb").read()


def test_fixture_name_with_scn_suffix_resolves(capsys):
    code, out, _ = run_cli(capsys, "run", "fig6_classroom.scn")
    assert code == 0
    assert "5 devices discovered" in out


def test_run_multiple_scenarios_with_jobs(capsys, tmp_path):
    report_dir = tmp_path / "batch"
    code, out, _ = run_cli(capsys, "run", "fig6_classroom", "live_test",
                           "--jobs", "2", "--report", str(report_dir))
    assert code == 0
    assert (report_dir / "fig6_classroom" / "log.txt").exists()
    assert (report_dir / "live_test" / "report.txt").exists()
    # outputs arrive in input order regardless of parallelism
    assert out.index("fig6_classroom") < out.index("live_test")


def test_validate_ok(capsys):
    code, out, _ = run_cli(capsys, "validate", "live_test")
    assert code == 0
    assert "ok:" in out and "12 devices" not in out  # 13 including the client
    assert "13 devices" in out


def test_validate_rejects_bad_file(capsys, tmp_path):
    path = tmp_path / "bad.scn"
    path.write_text('{"schema_version": 1, "mode": "stepped", "bogus": true}')
    code, out, err = run_cli(capsys, "validate", str(path))
    assert code == 1
    assert "bogus" in err


def test_run_missing_scenario_errors(capsys):
    code, _, err = run_cli(capsys, "run", "no_such_fixture")
    assert code == 1
    assert "no such scenario" in err


def test_metrics_course_form(capsys):
    code, out, _ = run_cli(capsys, "metrics", "--students", "18",
                           "--pages", "3", "--weeks", "17")
    assert code == 0
    assert "pages_per_week=54" in out
    assert "pages=918" in out


def test_metrics_campus_form(capsys):
    code, out, _ = run_cli(capsys, "metrics", "--campus", "800",
                           "--fraction", "1/4", "--pages-each", "1836")
    assert code == 0
    assert "pages=367200" in out
    assert "reams=708" in out
    assert "trees=44" in out


def test_metrics_pages_total_form(capsys):
    code, out, _ = run_cli(capsys, "metrics", "--pages-total", "8300")
    assert code == 0
    assert "reams=16" in out
    assert "trees=1" in out


def test_metrics_zero_inputs(capsys):
    code, out, _ = run_cli(capsys, "metrics", "--students", "0",
                           "--pages", "3", "--weeks", "17")
    assert code == 0
    assert "pages=0" in out


def test_metrics_rejects_non_integral_campus(capsys):
    code, _, err = run_cli(capsys, "metrics", "--campus", "801",
                           "--fraction", "1/4", "--pages-each", "1836")
    assert code == 1
    assert "whole number" in err


def test_metrics_usage_error(capsys):
    code, _, err = run_cli(capsys, "metrics")
    assert code == 1
    assert "metrics needs" in err


def test_step_mode_gates_on_input(capsys, monkeypatch, tmp_path):
    fed = iter([""] * 20)
    monkeypatch.setattr("builtins.input", lambda prompt="": next(fed))
    code, out, _ = run_cli(capsys, "run", "fig6_classroom", "--step")
    assert code == 0
    assert "Step 8." in out


def test_step_flag_rejected_for_proactive(capsys):
    code, _, err = run_cli(capsys, "run", "live_test", "--step")
    assert code == 1
    assert "stepped-mode" in err


def test_exit_code_zero_with_undelivered_members(capsys, tmp_path):
    # an unreachable roster member must not fail the process
    data = json.loads(open(shipped_fixture_path("late_arrival")).read())
    data["devices"] = [d for d in data["devices"]
                       if d["mac"] != "0019E3A20002"]
    path = tmp_path / "absent.scn"
    path.write_text(json.dumps(data))
    code, out, _ = run_cli(capsys, "run", str(path))
    assert code == 0
    assert "outcome=never-discovered" in out
