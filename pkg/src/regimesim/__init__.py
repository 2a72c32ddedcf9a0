"""Simulation toolkit for regime-aware server cluster energy management."""

from __future__ import annotations

__version__ = "0.1.0"

from .analytic import HomogeneousModelParams, InfeasibleModelError, homogeneous_savings
from .config import (
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    PRESETS,
    SimulationConfig,
    config_from_mapping,
    config_to_mapping,
    emit_config,
    expand_mapping,
    expand_preset,
    load_to_string,
    parse_config,
    parse_config_file,
    parse_load,
    parse_policy,
    policy_to_string,
    preset_mapping,
)
from .csvio import (
    CSV_HEADER,
    records_from_csv,
    records_to_csv,
    result_to_json_obj,
    summary_to_csv,
    summary_to_dict,
)
from .energy import (
    DEFAULT_PROFILE,
    DEFAULT_SLEEP_TIMINGS,
    EnergyProfile,
    IllegalTransitionError,
    InvalidBoundariesError,
    Regime,
    RegimeBoundaries,
    SERVER_POWER_PRESETS,
    SleepState,
    SleepTimings,
    choose_sleep_state,
    classify_regime,
    optimal_band,
    power_draw,
    transition_sleep,
)
from .engine import (
    CompareResult,
    EnergyParts,
    MetricsRecord,
    RunResult,
    RunSummary,
    Simulation,
    compare_energy,
    ratio_time_series,
    run,
    run_result,
    summarize,
)
from .policies import (
    AlwaysOn,
    Autoscale,
    LoadHistory,
    PolicyKind,
    PredictiveLinearRegression,
    PredictiveMovingWindow,
    Reactive,
    ReactiveExtraCapacity,
    RegimeOptimal,
    count_violations,
    predict_linear_regression,
    predict_moving_window,
    target_active_servers,
)
from .protocol import (
    Cluster,
    CostModel,
    MatchResult,
    MessageLog,
    ProtocolParams,
    ReallocationDecision,
    RecipientPool,
    ScalingCosts,
    ServerState,
    count_violation_apps,
    forecast_regime,
    leader_match,
    migrate_vm,
    negotiate,
    predicted_load,
    sample_boundaries,
    wake_servers,
)
from .workload import (
    ApplicationDescriptor,
    LoadProfile,
    advance_demand,
    generate_initial_load,
    parse_demand_trace,
)
