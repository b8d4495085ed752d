import csv

import pytest

from bubblefill.cli import EXIT_ADMISSION, EXIT_CONFIG, EXIT_OK, EXIT_OUTPUT, main

SMALL = """\
trace.mode = DP
trace.iteration_ms = 100
trace.bubble_pct = 30
trace.iterations = 3
workload.class = offline
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text(SMALL)
    return p


def rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_run_writes_outputs(cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["--scenario", str(cfg), "--policy", "specinf", "--out", str(out), "--dump-events"]) == EXIT_OK
    assert len(rows(out / "report.csv")) == 1
    for name in ("decisions.log", "gates.log", "events.log", "utilization.csv", "admission.csv",
                 "utilization.png"):
        assert (out / name).stat().st_size > 0
    assert (out / "utilization.csv").read_text().startswith("time_us,util_pct\n")


def test_events_log_optional(cfg, tmp_path):
    assert main(["--scenario", str(cfg), "--out", str(tmp_path / "o"), "--no-plots"]) == EXIT_OK
    assert not (tmp_path / "o" / "events.log").exists()


def test_compare(cfg, tmp_path):
    out = tmp_path / "cmp"
    assert main(["--scenario", str(cfg), "--out", str(out), "--compare"]) == EXIT_OK
    report = rows(out / "report.csv")
    assert [r["policy"] for r in report] == ["specinf", "co_exec", "exclusive"]
    assert float(report[0]["train_tput_norm"]) >= float(report[1]["train_tput_norm"])
    for p in ("specinf", "co_exec", "exclusive"):
        assert (out / f"utilization_{p}.csv").exists()
    assert (out / "comparison.png").exists()


def test_unknown_policy(cfg, tmp_path, capsys):
    assert main(["--scenario", str(cfg), "--policy", "mps", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "unknown policy" in capsys.readouterr().err


def test_config_error_is_line_anchored(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text(SMALL + "scheduler.gamma = fast\n")
    assert main(["--scenario", str(p), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "bad.cfg:6:" in capsys.readouterr().err


def test_missing_scenario_file(tmp_path):
    assert main(["--scenario", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_admission_rejection(tmp_path, capsys, scenario_dir):
    code = main(["--scenario", str(scenario_dir / "mem_reject.cfg"), "--out", str(tmp_path)])
    assert code == EXIT_ADMISSION
    assert "MEM" in capsys.readouterr().err
    assert "offline0,reject,MEM" in (tmp_path / "admission.csv").read_text()


def test_unwritable_output(cfg, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["--scenario", str(cfg), "--out", str(blocker / "sub")]) == EXIT_OUTPUT


def test_seed_range(cfg, tmp_path):
    assert main(["--scenario", str(cfg), "--seed", "-1", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["--scenario", str(cfg), "--seed", str(2**64), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_CONFIG
