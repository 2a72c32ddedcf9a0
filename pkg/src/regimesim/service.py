"""HTTP service around configuration expansion and simulation runs.

File I/O stays on the caller's side: requests carry YAML text or config
mappings, responses carry records and summaries. The command-line
client mounts this app in process by default.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .config import (
    PRESETS,
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    apply_overrides,
    config_from_mapping,
    config_to_mapping,
    expand_mapping,
    expand_preset,
    parse_mapping,
    parse_policy,
    preset_mapping,
)
from .csvio import record_to_dict, summary_to_dict
from .engine import compare_energy, run_result
from .schemas import (
    CompareRequest,
    CompareResponse,
    ExpandRequest,
    ExpandResponse,
    HealthResponse,
    PresetsResponse,
    SimulateRequest,
    SimulateResponse,
)

app = FastAPI(title="regimesim", version=__version__)


def _bad_request(exc: ConfigError) -> HTTPException:
    detail: dict[str, object] = {"message": str(exc)}
    if isinstance(exc, ConfigParseError):
        detail["line"] = exc.line
        detail["column"] = exc.column
    elif isinstance(exc, ConfigValidationError):
        detail["key"] = exc.key
    return HTTPException(status_code=400, detail=detail)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/presets", response_model=PresetsResponse)
def presets() -> PresetsResponse:
    return PresetsResponse(
        presets={
            name: [config_to_mapping(c) for c in expand_preset(name)]
            for name in sorted(PRESETS)
        }
    )


@app.post("/config/expand", response_model=ExpandResponse)
def config_expand(req: ExpandRequest) -> ExpandResponse:
    try:
        if (req.yaml is None) == (req.preset is None):
            raise ConfigValidationError("provide exactly one of 'yaml' or 'preset'")
        if req.yaml is not None:
            mapping = parse_mapping(req.yaml)
        else:
            mapping = preset_mapping(req.preset)
        if req.overrides:
            mapping = apply_overrides(mapping, req.overrides)
        configs = expand_mapping(mapping)
    except ConfigError as exc:
        raise _bad_request(exc) from None
    return ExpandResponse(configs=[config_to_mapping(c) for c in configs])


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    try:
        cfg = config_from_mapping(req.config)
    except ConfigError as exc:
        raise _bad_request(exc) from None
    result = run_result(cfg)
    return SimulateResponse(
        records=[record_to_dict(r) for r in result.records],
        summary=summary_to_dict(result.summary),
        message_log=result.message_log,
    )


@app.post("/compare", response_model=CompareResponse)
def compare(req: CompareRequest) -> CompareResponse:
    try:
        cfg = config_from_mapping(req.config)
        candidate = parse_policy(req.candidate) if req.candidate is not None else None
    except ConfigError as exc:
        raise _bad_request(exc) from None
    result = compare_energy(cfg, candidate)
    return CompareResponse(
        energy_always_on_j=result.energy_always_on_j,
        energy_candidate_j=result.energy_candidate_j,
        savings_ratio=result.savings_ratio,
    )
