"""Run configuration: typed scenarios, YAML parsing, sweep expansion.

A scenario file is a YAML mapping. Scalar keys mirror
:class:`SimulationConfig` fields; the plural keys ``sizes``, ``loads``,
``policies``, and ``seeds`` sweep their scalar counterparts and expand to
the cross product. Every expanded run gets a distinct seed: an explicit
``seeds`` list is used verbatim, otherwise the base seed plus the run
index within the product.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .energy import (
    DEFAULT_SLEEP_TIMINGS,
    EnergyProfile,
    RegimeBoundaries,
    SERVER_POWER_PRESETS,
    SleepState,
    SleepTimings,
)
from .policies import (
    AlwaysOn,
    Autoscale,
    PolicyKind,
    PredictiveLinearRegression,
    PredictiveMovingWindow,
    Reactive,
    ReactiveExtraCapacity,
    RegimeOptimal,
)
from .protocol import CostModel, ProtocolParams
from .workload import LoadProfile


class ConfigError(ValueError):
    """Base class for configuration problems."""


class ConfigParseError(ConfigError):
    """The source text is not valid YAML."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        if line is not None and column is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ConfigValidationError(ConfigError):
    """The parsed mapping violates the scenario schema."""

    def __init__(self, message: str, key: str | None = None) -> None:
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


_POLICY_NAMES: dict[str, type] = {
    "reactive": Reactive,
    "reactive_extra": ReactiveExtraCapacity,
    "autoscale": Autoscale,
    "moving_window": PredictiveMovingWindow,
    "linear_regression": PredictiveLinearRegression,
    "regime_optimal": RegimeOptimal,
    "always_on": AlwaysOn,
}
_POLICY_TYPES = {cls: name for name, cls in _POLICY_NAMES.items()}


def parse_policy(text: str) -> PolicyKind:
    """Parse ``name`` or ``name:param=value,...`` into a policy instance."""
    if not isinstance(text, str):
        raise ConfigValidationError(f"expected a policy string, got {text!r}", key="policy")
    name, sep, rest = text.partition(":")
    name = name.strip()
    cls = _POLICY_NAMES.get(name)
    if cls is None:
        raise ConfigValidationError(
            f"unknown policy {name!r}; expected one of {sorted(_POLICY_NAMES)}", key="policy"
        )
    kwargs: dict[str, float | int] = {}
    if sep:
        defaults = {f.name: f.default for f in fields(cls)}
        for pair in rest.split(","):
            pair = pair.strip()
            if not pair:
                continue
            key, eq, value = pair.partition("=")
            key = key.strip()
            value = value.strip()
            if not eq or not key or not value:
                raise ConfigValidationError(
                    f"malformed policy parameter {pair!r}; expected key=value", key="policy"
                )
            if key not in defaults:
                raise ConfigValidationError(
                    f"policy {name!r} has no parameter {key!r}", key="policy"
                )
            try:
                if isinstance(defaults[key], bool) or not isinstance(defaults[key], int):
                    kwargs[key] = float(value)
                else:
                    kwargs[key] = int(value)
            except ValueError:
                raise ConfigValidationError(
                    f"policy parameter {key!r} has non-numeric value {value!r}", key="policy"
                ) from None
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="policy") from None


def policy_to_string(policy: PolicyKind) -> str:
    """Inverse of :func:`parse_policy`; omits parameters at their defaults."""
    name = _POLICY_TYPES.get(type(policy))
    if name is None:
        raise ConfigValidationError(f"unknown policy object {policy!r}", key="policy")
    parts = [
        f"{f.name}={getattr(policy, f.name)!r}"
        for f in fields(policy)
        if getattr(policy, f.name) != f.default
    ]
    return f"{name}:{','.join(parts)}" if parts else name


def parse_load(value: Any) -> LoadProfile:
    """Parse ``low``, ``high``, ``min:max``, or a two-number list."""
    if isinstance(value, LoadProfile):
        return value
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigValidationError(
                f"a load range needs exactly two numbers, got {value!r}", key="load"
            )
        return LoadProfile.custom(_as_float(value[0], "load"), _as_float(value[1], "load"))
    if isinstance(value, str):
        text = value.strip()
        if text == "low":
            return LoadProfile.low_avg_30()
        if text == "high":
            return LoadProfile.high_avg_70()
        if ":" in text:
            low_s, _, high_s = text.partition(":")
            try:
                return LoadProfile.custom(float(low_s), float(high_s))
            except ValueError as exc:
                raise ConfigValidationError(str(exc), key="load") from None
        raise ConfigValidationError(
            f"unknown load {text!r}; expected 'low', 'high', or 'min:max'", key="load"
        )
    raise ConfigValidationError(f"expected a load string or pair, got {value!r}", key="load")


def load_to_string(profile: LoadProfile) -> str:
    """Inverse of :func:`parse_load`."""
    if profile.kind in ("low", "high"):
        return profile.kind
    return f"{profile.low!r}:{profile.high!r}"


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one simulation run depends on."""

    cluster_size: int
    intervals: int = 40
    seed: int = 0
    load: LoadProfile = field(default_factory=LoadProfile.low_avg_30)
    apps_per_server: int = 4
    lambda_range: tuple[float, float] = (0.01, 0.05)
    policy: PolicyKind = field(default_factory=RegimeOptimal)
    power_preset: str | None = None
    peak_power_w: float = 225.0
    idle_fraction: float = 0.5
    curve_points: tuple[tuple[float, float], ...] | None = None
    boundaries: tuple[float, float, float, float] | None = None
    tau_s: float = 60.0
    c6_residual_fraction: float | None = None
    cost: CostModel = field(default_factory=CostModel)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    demand_trace: str | None = None
    message_log: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "lambda_range", tuple(float(x) for x in self.lambda_range)
        )
        if self.curve_points is not None:
            object.__setattr__(
                self,
                "curve_points",
                tuple((float(x), float(y)) for x, y in self.curve_points),
            )
        if self.boundaries is not None:
            object.__setattr__(
                self, "boundaries", tuple(float(x) for x in self.boundaries)
            )
        if self.cluster_size < 1:
            raise ConfigValidationError("must be >= 1", key="cluster_size")
        if self.intervals < 1:
            raise ConfigValidationError("must be >= 1", key="intervals")
        if self.apps_per_server < 1:
            raise ConfigValidationError("must be >= 1", key="apps_per_server")
        if len(self.lambda_range) != 2 or not 0.0 <= self.lambda_range[0] <= self.lambda_range[1]:
            raise ConfigValidationError(
                "must be a pair with 0 <= low <= high", key="lambda_range"
            )
        if not isinstance(self.load, LoadProfile):
            raise ConfigValidationError(f"expected a LoadProfile, got {self.load!r}", key="load")
        if type(self.policy) not in _POLICY_TYPES:
            raise ConfigValidationError(f"unknown policy {self.policy!r}", key="policy")
        if self.power_preset is not None and self.power_preset not in SERVER_POWER_PRESETS:
            raise ConfigValidationError(
                f"unknown model {self.power_preset!r}; expected one of "
                f"{sorted(SERVER_POWER_PRESETS)}",
                key="power_preset",
            )
        if self.tau_s <= 0.0:
            raise ConfigValidationError("must be positive", key="tau_s")
        if self.boundaries is not None and len(self.boundaries) != 4:
            raise ConfigValidationError("must list exactly four thresholds", key="boundaries")
        if self.c6_residual_fraction is not None and not (
            0.0 < self.c6_residual_fraction
            < DEFAULT_SLEEP_TIMINGS.residual_fraction[SleepState.C3]
        ):
            raise ConfigValidationError(
                "must lie strictly between 0 and the shallower-state residual",
                key="c6_residual_fraction",
            )
        if not isinstance(self.cost, CostModel):
            raise ConfigValidationError(f"expected a CostModel, got {self.cost!r}", key="cost")
        if not isinstance(self.protocol, ProtocolParams):
            raise ConfigValidationError(
                f"expected ProtocolParams, got {self.protocol!r}", key="protocol"
            )
        try:
            self.energy_profile()
            self.regime_bounds()
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigValidationError(str(exc)) from None

    def energy_profile(self) -> EnergyProfile:
        peak = (
            SERVER_POWER_PRESETS[self.power_preset]
            if self.power_preset is not None
            else self.peak_power_w
        )
        return EnergyProfile(
            peak_power=peak,
            idle_fraction=self.idle_fraction,
            curve_points=self.curve_points,
        )

    def sleep_timings(self) -> SleepTimings:
        if self.c6_residual_fraction is None:
            return DEFAULT_SLEEP_TIMINGS
        residual = dict(DEFAULT_SLEEP_TIMINGS.residual_fraction)
        residual[SleepState.C6] = self.c6_residual_fraction
        return SleepTimings(residual_fraction=residual)

    def regime_bounds(self) -> RegimeBoundaries | None:
        if self.boundaries is None:
            return None
        return RegimeBoundaries(*self.boundaries)


_SWEEP_OF_SCALAR = {
    "cluster_size": "sizes",
    "load": "loads",
    "policy": "policies",
    "seed": "seeds",
}


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValidationError(f"expected an integer, got {value!r}", key=key)
    return value


def _as_float(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(f"expected a number, got {value!r}", key=key)
    return float(value)


def _as_bool(value: Any, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigValidationError(f"expected true or false, got {value!r}", key=key)
    return value


def _as_str(value: Any, key: str) -> str:
    if not isinstance(value, str):
        raise ConfigValidationError(f"expected a string, got {value!r}", key=key)
    return value


def _as_pair(value: Any, key: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigValidationError(f"expected a two-number list, got {value!r}", key=key)
    return (_as_float(value[0], key), _as_float(value[1], key))


def _as_curve(value: Any, key: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigValidationError(f"expected a list of [x, y] pairs, got {value!r}", key=key)
    return tuple(_as_pair(point, key) for point in value)


def _as_boundaries(value: Any, key: str) -> tuple[float, float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ConfigValidationError(f"expected four thresholds, got {value!r}", key=key)
    a1, a2, a3, a4 = (_as_float(x, key) for x in value)
    return (a1, a2, a3, a4)


def _as_nested(value: Any, key: str, cls: type) -> Any:
    if not isinstance(value, dict):
        raise ConfigValidationError(f"expected a mapping, got {value!r}", key=key)
    defaults = {f.name: f.default for f in fields(cls)}
    kwargs: dict[str, Any] = {}
    for sub, raw in value.items():
        if sub not in defaults:
            raise ConfigValidationError(
                f"unknown key {sub!r}; expected one of {sorted(defaults)}", key=key
            )
        if isinstance(defaults[sub], bool) or not isinstance(defaults[sub], int):
            kwargs[sub] = _as_float(raw, f"{key}.{sub}")
        else:
            kwargs[sub] = _as_int(raw, f"{key}.{sub}")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key=key) from None


_SCALAR_PARSERS = {
    "cluster_size": _as_int,
    "intervals": _as_int,
    "seed": _as_int,
    "apps_per_server": _as_int,
    "load": lambda v, k: parse_load(v),
    "lambda_range": _as_pair,
    "policy": lambda v, k: parse_policy(_as_str(v, k)),
    "power_preset": _as_str,
    "peak_power_w": _as_float,
    "idle_fraction": _as_float,
    "curve_points": _as_curve,
    "boundaries": _as_boundaries,
    "tau_s": _as_float,
    "c6_residual_fraction": _as_float,
    "cost": lambda v, k: _as_nested(v, k, CostModel),
    "protocol": lambda v, k: _as_nested(v, k, ProtocolParams),
    "demand_trace": _as_str,
    "message_log": _as_bool,
}

KNOWN_KEYS = frozenset(_SCALAR_PARSERS) | frozenset(_SWEEP_OF_SCALAR.values())


def config_from_mapping(mapping: dict[str, Any]) -> SimulationConfig:
    """Build a single run from a mapping of scalar keys."""
    configs = expand_mapping(mapping)
    if len(configs) != 1:
        raise ConfigValidationError(
            f"expected a single run, but the mapping expands to {len(configs)}"
        )
    return configs[0]


def expand_mapping(mapping: Any) -> list[SimulationConfig]:
    """Expand a scenario mapping into its full list of runs."""
    if not isinstance(mapping, dict):
        raise ConfigValidationError(f"a scenario must be a mapping, got {mapping!r}")
    remaining = dict(mapping)
    for key in remaining:
        if not isinstance(key, str) or key not in KNOWN_KEYS:
            raise ConfigValidationError(
                f"unknown key {key!r}; expected one of {sorted(KNOWN_KEYS)}"
            )
    for scalar, plural in _SWEEP_OF_SCALAR.items():
        if scalar in remaining and plural in remaining:
            raise ConfigValidationError(
                f"give either {scalar!r} or {plural!r}, not both", key=plural
            )

    def sweep_list(key: str) -> list[Any] | None:
        if key not in remaining:
            return None
        raw = remaining.pop(key)
        if not isinstance(raw, (list, tuple)) or not raw:
            raise ConfigValidationError(f"expected a non-empty list, got {raw!r}", key=key)
        return list(raw)

    sizes_raw = sweep_list("sizes")
    loads_raw = sweep_list("loads")
    policies_raw = sweep_list("policies")
    seeds_raw = sweep_list("seeds")

    sizes = [_as_int(v, "sizes") for v in sizes_raw] if sizes_raw is not None else None
    loads = [parse_load(v) for v in loads_raw] if loads_raw is not None else None
    policies = (
        [parse_policy(_as_str(v, "policies")) for v in policies_raw]
        if policies_raw is not None
        else None
    )
    seeds = [_as_int(v, "seeds") for v in seeds_raw] if seeds_raw is not None else None
    if seeds is not None and len(set(seeds)) != len(seeds):
        raise ConfigValidationError("seed values must be distinct", key="seeds")

    kwargs: dict[str, Any] = {}
    for key, value in remaining.items():
        kwargs[key] = _SCALAR_PARSERS[key](value, key)

    if sizes is None and "cluster_size" not in kwargs:
        raise ConfigValidationError("a cluster size is required", key="cluster_size")
    size_axis = sizes if sizes is not None else [kwargs.pop("cluster_size")]
    load_axis = loads if loads is not None else [kwargs.pop("load", LoadProfile.low_avg_30())]
    policy_axis = (
        policies if policies is not None else [kwargs.pop("policy", RegimeOptimal())]
    )
    base_seed = kwargs.pop("seed", 0)
    seed_axis: list[int | None] = list(seeds) if seeds is not None else [None]

    configs: list[SimulationConfig] = []
    run_index = 0
    for seed_value in seed_axis:
        for size in size_axis:
            for load in load_axis:
                for policy in policy_axis:
                    seed = seed_value if seed_value is not None else base_seed + run_index
                    configs.append(
                        SimulationConfig(
                            cluster_size=size,
                            load=load,
                            policy=policy,
                            seed=seed,
                            **kwargs,
                        )
                    )
                    run_index += 1
    return configs


def parse_mapping(text: str) -> dict[str, Any]:
    """Parse scenario YAML text into its raw mapping, without expanding."""
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        detail = exc.problem or str(exc)
        if mark is not None:
            raise ConfigParseError(detail, line=mark.line + 1, column=mark.column + 1) from None
        raise ConfigParseError(detail) from None
    except yaml.YAMLError as exc:
        raise ConfigParseError(str(exc)) from None
    if data is None:
        raise ConfigValidationError("the scenario is empty")
    if not isinstance(data, dict):
        raise ConfigValidationError(f"a scenario must be a mapping, got {data!r}")
    return data


def parse_config(text: str) -> list[SimulationConfig]:
    """Parse scenario YAML text and expand any sweeps."""
    return expand_mapping(parse_mapping(text))


def parse_config_file(path: str | Path) -> list[SimulationConfig]:
    """Parse a scenario file. I/O errors propagate as OSError."""
    return parse_config(Path(path).read_text(encoding="utf-8"))


def apply_overrides(mapping: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Overlay override keys on a scenario mapping, before expansion.

    Overriding a scalar drops the corresponding sweep list (and vice
    versa), so a command-line value replaces a swept axis outright.
    """
    plural_of = _SWEEP_OF_SCALAR
    scalar_of = {plural: scalar for scalar, plural in plural_of.items()}
    merged = dict(mapping)
    for key, value in overrides.items():
        if key in plural_of:
            merged.pop(plural_of[key], None)
        elif key in scalar_of:
            merged.pop(scalar_of[key], None)
        merged[key] = value
    return merged


def config_to_mapping(config: SimulationConfig) -> dict[str, Any]:
    """Represent a run as a YAML/JSON-safe mapping of scalar keys."""
    mapping: dict[str, Any] = {
        "cluster_size": config.cluster_size,
        "intervals": config.intervals,
        "seed": config.seed,
        "load": load_to_string(config.load),
        "apps_per_server": config.apps_per_server,
        "lambda_range": list(config.lambda_range),
        "policy": policy_to_string(config.policy),
        "peak_power_w": config.peak_power_w,
        "idle_fraction": config.idle_fraction,
        "tau_s": config.tau_s,
        "cost": {f.name: getattr(config.cost, f.name) for f in fields(config.cost)},
        "protocol": {
            f.name: getattr(config.protocol, f.name) for f in fields(config.protocol)
        },
        "message_log": config.message_log,
    }
    if config.power_preset is not None:
        mapping["power_preset"] = config.power_preset
    if config.curve_points is not None:
        mapping["curve_points"] = [list(point) for point in config.curve_points]
    if config.boundaries is not None:
        mapping["boundaries"] = list(config.boundaries)
    if config.c6_residual_fraction is not None:
        mapping["c6_residual_fraction"] = config.c6_residual_fraction
    if config.demand_trace is not None:
        mapping["demand_trace"] = config.demand_trace
    return mapping


def emit_config(config: SimulationConfig) -> str:
    """Emit YAML that parses back to exactly this run."""
    return yaml.safe_dump(config_to_mapping(config), sort_keys=False)


PRESETS: dict[str, dict[str, Any]] = {
    "table2": {
        "sizes": [100, 1000, 10000],
        "loads": ["low", "high"],
        "intervals": 40,
    },
    "analytic": {
        "cluster_size": 100,
        "intervals": 40,
        "load": "0.0:0.6",
        "apps_per_server": 8,
        "lambda_range": [0.0, 0.0],
        "boundaries": [0.70, 0.88, 0.925, 0.96],
        "curve_points": [[0.0, 0.5], [0.3, 0.6], [0.9, 0.8], [1.0, 1.0]],
        "c6_residual_fraction": 0.005,
    },
}


def preset_mapping(name: str) -> dict[str, Any]:
    """A copy of the named preset's raw scenario mapping."""
    if name not in PRESETS:
        raise ConfigValidationError(
            f"unknown preset {name!r}; expected one of {sorted(PRESETS)}", key="preset"
        )
    return copy.deepcopy(PRESETS[name])


def expand_preset(name: str) -> list[SimulationConfig]:
    """Expand the named preset into its runs."""
    return expand_mapping(preset_mapping(name))
