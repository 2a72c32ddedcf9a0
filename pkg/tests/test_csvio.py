"""Tests for CSV and JSON serialization of run output."""

import json

import pytest

from regimesim.config import SimulationConfig
from regimesim.csvio import (
    CSV_HEADER,
    SUMMARY_HEADER,
    record_from_dict,
    record_to_dict,
    records_from_csv,
    records_to_csv,
    result_to_json_obj,
    summary_from_dict,
    summary_to_csv,
    summary_to_dict,
)
from regimesim.engine import MetricsRecord, run
from regimesim.workload import LoadProfile

SAMPLE = MetricsRecord(
    interval=3,
    r1=1,
    r2=2,
    r3=10,
    r4=0,
    r5=1,
    asleep_c1=0,
    asleep_c3=4,
    asleep_c6=2,
    energy_j=12345.678901234567,
    in_cluster=3,
    local=6,
    ratio=0.5,
    violations=2,
)

GAP = MetricsRecord(
    interval=4,
    r1=0,
    r2=0,
    r3=0,
    r4=0,
    r5=0,
    asleep_c1=0,
    asleep_c3=0,
    asleep_c6=0,
    energy_j=1.0,
    in_cluster=4,
    local=0,
    ratio=None,
    violations=0,
)


def test_header_is_pinned():
    """The column order is part of the output contract."""
    assert CSV_HEADER == (
        "interval,r1,r2,r3,r4,r5,asleep_c1,asleep_c3,asleep_c6,"
        "energy_j,in_cluster,local,ratio,violations"
    )


def test_empty_records_give_header_only():
    """Zero records still produce a parseable header line."""
    text = records_to_csv([])
    assert text == CSV_HEADER + "\n"
    assert records_from_csv(text) == []


def test_row_rendering_exact():
    """Integers print plain, floats via repr, gaps as empty fields."""
    text = records_to_csv([SAMPLE, GAP])
    lines = text.splitlines()
    assert lines[1] == "3,1,2,10,0,1,0,4,2,12345.678901234567,3,6,0.5,2"
    assert lines[2] == "4,0,0,0,0,0,0,0,0,1.0,4,0,,0"


def test_records_round_trip_exact():
    """Parsing the rendered CSV reproduces the records exactly."""
    records = [SAMPLE, GAP]
    assert records_from_csv(records_to_csv(records)) == records


def test_run_output_round_trips():
    """A real run's table survives serialization bit for bit."""
    records, _ = run(
        SimulationConfig(cluster_size=20, intervals=8, load=LoadProfile.low_avg_30())
    )
    text = records_to_csv(records)
    assert records_from_csv(text) == records
    assert records_to_csv(records_from_csv(text)) == text


def test_bad_csv_rejected():
    """Missing headers and short rows raise rather than misparse."""
    with pytest.raises(ValueError, match="header"):
        records_from_csv("nope\n1,2,3\n")
    with pytest.raises(ValueError, match="14 fields"):
        records_from_csv(CSV_HEADER + "\n1,2,3\n")


def test_summary_csv_shape():
    """The summary renders as one pinned header and one data row."""
    from regimesim.engine import summarize

    summary = summarize([SAMPLE, GAP], histogram_before=(5, 4, 3, 2, 1))
    text = summary_to_csv(summary)
    lines = text.splitlines()
    assert lines[0] == SUMMARY_HEADER
    fields = lines[1].split(",")
    assert len(fields) == 15
    assert fields[0] == "0.5"
    assert fields[2] == "0"
    assert fields[5:10] == ["5", "4", "3", "2", "1"]
    assert fields[10:15] == ["0", "0", "0", "0", "0"]


def test_summary_csv_gap_fields():
    """An all-gap run leaves the ratio columns empty."""
    from regimesim.engine import summarize

    summary = summarize([GAP], histogram_before=(0, 0, 0, 0, 0))
    row = summary_to_csv(summary).splitlines()[1]
    assert row.startswith(",,")


def test_record_dict_round_trip():
    """Dict encoding preserves every field including the gap sentinel."""
    for record in (SAMPLE, GAP):
        assert record_from_dict(record_to_dict(record)) == record


def test_summary_dict_round_trip():
    """Summary dict encoding inverts cleanly."""
    from regimesim.engine import summarize

    summary = summarize([SAMPLE, GAP], histogram_before=(1, 1, 1, 1, 1))
    assert summary_from_dict(summary_to_dict(summary)) == summary


def test_json_object_is_serializable():
    """The JSON object dumps with null for gaps and loads back."""
    from regimesim.engine import summarize

    summary = summarize([SAMPLE, GAP], histogram_before=(0, 0, 2, 0, 0))
    obj = result_to_json_obj([SAMPLE, GAP], summary)
    text = json.dumps(obj)
    loaded = json.loads(text)
    assert loaded["records"][1]["ratio"] is None
    assert loaded["summary"]["histogram_before"] == [0, 0, 2, 0, 0]
    assert [record_from_dict(d) for d in loaded["records"]] == [SAMPLE, GAP]
    assert summary_from_dict(loaded["summary"]) == summary
