"""Locale-independent CSV and JSON serialization of run output.

Floats are written with ``repr`` so values survive a round trip exactly
and the byte stream never depends on locale. An undefined decision ratio
(no local decisions that interval) serializes as an empty CSV field and
as JSON null.
"""

from __future__ import annotations

from typing import Any

from .engine import MetricsRecord, RunSummary

CSV_HEADER = (
    "interval,r1,r2,r3,r4,r5,asleep_c1,asleep_c3,asleep_c6,"
    "energy_j,in_cluster,local,ratio,violations"
)

SUMMARY_HEADER = (
    "mean_ratio,std_ratio,final_asleep,total_energy_j,total_violations,"
    "r1_before,r2_before,r3_before,r4_before,r5_before,"
    "r1_after,r2_after,r3_after,r4_after,r5_after"
)


def _opt(value: float | None) -> str:
    return "" if value is None else repr(value)


def records_to_csv(records: list[MetricsRecord]) -> str:
    """Render records as CSV, header first; no records means header only."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.interval},{r.r1},{r.r2},{r.r3},{r.r4},{r.r5},"
            f"{r.asleep_c1},{r.asleep_c3},{r.asleep_c6},"
            f"{r.energy_j!r},{r.in_cluster},{r.local},{_opt(r.ratio)},{r.violations}"
        )
    return "\n".join(lines) + "\n"


def records_from_csv(text: str) -> list[MetricsRecord]:
    """Parse CSV produced by :func:`records_to_csv`."""
    lines = [line for line in text.splitlines() if line]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("missing or unexpected CSV header")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 14:
            raise ValueError(f"expected 14 fields, got {len(parts)}: {line!r}")
        records.append(
            MetricsRecord(
                interval=int(parts[0]),
                r1=int(parts[1]),
                r2=int(parts[2]),
                r3=int(parts[3]),
                r4=int(parts[4]),
                r5=int(parts[5]),
                asleep_c1=int(parts[6]),
                asleep_c3=int(parts[7]),
                asleep_c6=int(parts[8]),
                energy_j=float(parts[9]),
                in_cluster=int(parts[10]),
                local=int(parts[11]),
                ratio=None if parts[12] == "" else float(parts[12]),
                violations=int(parts[13]),
            )
        )
    return records


def record_to_dict(record: MetricsRecord) -> dict[str, Any]:
    return {
        "interval": record.interval,
        "r1": record.r1,
        "r2": record.r2,
        "r3": record.r3,
        "r4": record.r4,
        "r5": record.r5,
        "asleep_c1": record.asleep_c1,
        "asleep_c3": record.asleep_c3,
        "asleep_c6": record.asleep_c6,
        "energy_j": record.energy_j,
        "in_cluster": record.in_cluster,
        "local": record.local,
        "ratio": record.ratio,
        "violations": record.violations,
    }


def record_from_dict(data: dict[str, Any]) -> MetricsRecord:
    ratio = data.get("ratio")
    return MetricsRecord(
        interval=int(data["interval"]),
        r1=int(data["r1"]),
        r2=int(data["r2"]),
        r3=int(data["r3"]),
        r4=int(data["r4"]),
        r5=int(data["r5"]),
        asleep_c1=int(data["asleep_c1"]),
        asleep_c3=int(data["asleep_c3"]),
        asleep_c6=int(data["asleep_c6"]),
        energy_j=float(data["energy_j"]),
        in_cluster=int(data["in_cluster"]),
        local=int(data["local"]),
        ratio=None if ratio is None else float(ratio),
        violations=int(data["violations"]),
    )


def summary_to_csv(summary: RunSummary) -> str:
    before = summary.histogram_before
    after = summary.histogram_after
    row = ",".join(
        [
            _opt(summary.mean_ratio),
            _opt(summary.std_ratio),
            str(summary.final_asleep),
            repr(summary.total_energy_j),
            str(summary.total_violations),
            *[str(c) for c in before],
            *[str(c) for c in after],
        ]
    )
    return f"{SUMMARY_HEADER}\n{row}\n"


def summary_to_dict(summary: RunSummary) -> dict[str, Any]:
    return {
        "mean_ratio": summary.mean_ratio,
        "std_ratio": summary.std_ratio,
        "final_asleep": summary.final_asleep,
        "total_energy_j": summary.total_energy_j,
        "total_violations": summary.total_violations,
        "histogram_before": list(summary.histogram_before),
        "histogram_after": list(summary.histogram_after),
    }


def summary_from_dict(data: dict[str, Any]) -> RunSummary:
    mean = data.get("mean_ratio")
    std = data.get("std_ratio")
    return RunSummary(
        mean_ratio=None if mean is None else float(mean),
        std_ratio=None if std is None else float(std),
        final_asleep=int(data["final_asleep"]),
        total_energy_j=float(data["total_energy_j"]),
        total_violations=int(data["total_violations"]),
        histogram_before=tuple(int(x) for x in data["histogram_before"]),
        histogram_after=tuple(int(x) for x in data["histogram_after"]),
    )


def result_to_json_obj(
    records: list[MetricsRecord], summary: RunSummary
) -> dict[str, Any]:
    return {
        "records": [record_to_dict(r) for r in records],
        "summary": summary_to_dict(summary),
    }
