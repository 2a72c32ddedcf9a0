"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel


class HealthResponse(BaseModel):
    status: str
    version: str


class ExpandRequest(BaseModel):
    """Expand scenario YAML or a named preset, after applying overrides."""

    yaml: str | None = None
    preset: str | None = None
    overrides: dict[str, Any] | None = None


class ExpandResponse(BaseModel):
    configs: list[dict[str, Any]]


class RecordModel(BaseModel):
    interval: int
    r1: int
    r2: int
    r3: int
    r4: int
    r5: int
    asleep_c1: int
    asleep_c3: int
    asleep_c6: int
    energy_j: float
    in_cluster: int
    local: int
    ratio: float | None = None
    violations: int


class SummaryModel(BaseModel):
    mean_ratio: float | None = None
    std_ratio: float | None = None
    final_asleep: int
    total_energy_j: float
    total_violations: int
    histogram_before: list[int]
    histogram_after: list[int]


class SimulateRequest(BaseModel):
    """One run, given as a mapping of scalar configuration keys."""

    config: dict[str, Any]


class SimulateResponse(BaseModel):
    records: list[RecordModel]
    summary: SummaryModel
    message_log: list[str] | None = None


class CompareRequest(BaseModel):
    """Compare a candidate policy against the always-on baseline."""

    config: dict[str, Any]
    candidate: str | None = None


class CompareResponse(BaseModel):
    energy_always_on_j: float
    energy_candidate_j: float
    savings_ratio: float


class PresetsResponse(BaseModel):
    presets: dict[str, list[dict[str, Any]]]
