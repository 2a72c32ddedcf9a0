"""Tests for the command-line client."""

import json

import yaml

from regimesim.cli import main
from regimesim.csvio import CSV_HEADER, SUMMARY_HEADER, records_from_csv


def test_basic_run_prints_csv(capsys):
    """A minimal invocation prints the per-interval table and exits zero."""
    code = main(["--cluster-size", "10", "--intervals", "3"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4


def test_same_seed_is_bytewise_identical(capsys):
    """Two invocations with one seed produce identical bytes."""
    argv = ["--cluster-size", "15", "--intervals", "4", "--seed", "3"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first == second
    main(["--cluster-size", "15", "--intervals", "4", "--seed", "4"])
    assert capsys.readouterr().out != first


def test_preset_sweep_writes_named_files(tmp_path, capsys):
    """The sweep preset writes one file per size and load combination."""
    out_dir = tmp_path / "runs"
    code = main(
        ["--preset", "table2", "--intervals", "2", "--output", str(out_dir)]
    )
    assert code == 0
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == [
        "table2_10000_high.csv",
        "table2_10000_low.csv",
        "table2_1000_high.csv",
        "table2_1000_low.csv",
        "table2_100_high.csv",
        "table2_100_low.csv",
    ]
    for p in out_dir.iterdir():
        records = records_from_csv(p.read_text(encoding="utf-8"))
        assert len(records) == 2


def test_summary_only_output(capsys):
    """--summary-only swaps the table for the one-row summary."""
    code = main(["--cluster-size", "10", "--intervals", "3", "--summary-only"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0] == SUMMARY_HEADER
    assert len(out.splitlines()) == 2


def test_json_format(capsys):
    """--format json emits a JSON object with records and summary."""
    code = main(["--cluster-size", "10", "--intervals", "3", "--format", "json"])
    out = capsys.readouterr().out
    assert code == 0
    obj = json.loads(out)
    assert len(obj["records"]) == 3
    assert "total_energy_j" in obj["summary"]


def test_dry_run_expands_without_simulating(tmp_path, capsys):
    """--dry-run prints the expanded configs as YAML documents."""
    scenario = tmp_path / "sweep.yaml"
    scenario.write_text("sizes: [10, 20]\nloads: [low, high]\n", encoding="utf-8")
    code = main(["--config", str(scenario), "--dry-run"])
    out = capsys.readouterr().out
    assert code == 0
    docs = list(yaml.safe_load_all(out))
    assert len(docs) == 4
    assert {d["cluster_size"] for d in docs} == {10, 20}
    assert CSV_HEADER not in out


def test_message_log_written(tmp_path, capsys):
    """--message-log records protocol traffic to the named file."""
    log_path = tmp_path / "messages.log"
    code = main(
        [
            "--cluster-size",
            "10",
            "--intervals",
            "4",
            "--message-log",
            str(log_path),
        ]
    )
    capsys.readouterr()
    assert code == 0
    lines = log_path.read_text(encoding="utf-8").splitlines()
    assert lines
    assert all(line.count(",") >= 4 for line in lines if line)


def test_single_output_file(tmp_path, capsys):
    """--output with one run writes that run to the named file."""
    target = tmp_path / "out" / "run.csv"
    code = main(
        ["--cluster-size", "10", "--intervals", "3", "--output", str(target)]
    )
    capsys.readouterr()
    assert code == 0
    records = records_from_csv(target.read_text(encoding="utf-8"))
    assert len(records) == 3


def test_flag_overrides_config_file(tmp_path, capsys):
    """Command-line values replace scenario file values."""
    scenario = tmp_path / "one.yaml"
    scenario.write_text("cluster_size: 8\nintervals: 5\n", encoding="utf-8")
    code = main(["--config", str(scenario), "--intervals", "2"])
    out = capsys.readouterr().out
    assert code == 0
    assert len(records_from_csv(out)) == 2


def test_sweep_to_stdout_separates_runs(tmp_path, capsys):
    """Multiple runs on stdout are delimited by run name comments."""
    path = tmp_path / "s.yaml"
    path.write_text("sizes: [8, 9]\nintervals: 2\n", encoding="utf-8")
    code = main(["--config", str(path)])
    out = capsys.readouterr().out
    assert code == 0
    markers = [line for line in out.splitlines() if line.startswith("# run ")]
    assert len(markers) == 2


def test_invalid_cluster_size_exits_one(capsys):
    """A zero cluster size is rejected with exit code one."""
    code = main(["--cluster-size", "0", "--intervals", "2"])
    err = capsys.readouterr().err
    assert code == 1
    assert "cluster_size" in err


def test_config_and_preset_conflict(capsys):
    """--config and --preset together exit with code one."""
    code = main(["--config", "x.yaml", "--preset", "table2"])
    assert code == 1
    assert "not both" in capsys.readouterr().err


def test_missing_config_file_exits_two(capsys):
    """An unreadable scenario file is an I/O failure."""
    code = main(["--config", "/nonexistent/path.yaml"])
    assert code == 2
    capsys.readouterr()


def test_unknown_flag_exits_one(capsys):
    """Argparse failures map to the invalid-arguments exit code."""
    code = main(["--wat"])
    assert code == 1
    capsys.readouterr()


def test_unknown_preset_exits_one(capsys):
    """An unknown preset name is rejected by the parser."""
    code = main(["--preset", "bogus"])
    assert code == 1
    capsys.readouterr()
