"""Capacity policies deciding how many servers stay awake each interval."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import ceil
from typing import Iterable, Sequence, Union

from .energy import Regime

DEFAULT_TARGET_UTILIZATION = 0.675


class InsufficientHistoryError(ValueError):
    """Predictive policy asked to predict from too little history."""


@dataclass(frozen=True)
class Reactive:
    """Size the active set to the demand observed right now."""

    target_utilization: float = DEFAULT_TARGET_UTILIZATION

    def __post_init__(self) -> None:
        if not 0.0 < self.target_utilization <= 1.0:
            raise ValueError(f"target_utilization outside (0, 1]: {self.target_utilization}")


@dataclass(frozen=True)
class ReactiveExtraCapacity:
    """Reactive sizing padded with a safety margin of extra servers."""

    margin: float = 0.2
    target_utilization: float = DEFAULT_TARGET_UTILIZATION

    def __post_init__(self) -> None:
        if not 0.0 < self.margin < 1.0:
            raise ValueError(f"margin outside (0, 1): {self.margin}")


@dataclass(frozen=True)
class Autoscale:
    """Reactive scale-up, but scale-down waits out a hold-down period."""

    hold_intervals: int = 3
    target_utilization: float = DEFAULT_TARGET_UTILIZATION

    def __post_init__(self) -> None:
        if self.hold_intervals < 1:
            raise ValueError("hold_intervals must be >= 1")


@dataclass(frozen=True)
class PredictiveMovingWindow:
    """Sizes to a windowed-mean demand forecast."""

    window: int = 5
    target_utilization: float = DEFAULT_TARGET_UTILIZATION

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class PredictiveLinearRegression:
    """Sizes to a least-squares trend forecast."""

    window: int = 5
    target_utilization: float = DEFAULT_TARGET_UTILIZATION

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ValueError("window must be >= 2")


@dataclass(frozen=True)
class RegimeOptimal:
    """Delegates all sleep and wake choices to the reallocation protocol."""


@dataclass(frozen=True)
class AlwaysOn:
    """Baseline: every server stays awake regardless of demand."""


PolicyKind = Union[
    Reactive,
    ReactiveExtraCapacity,
    Autoscale,
    PredictiveMovingWindow,
    PredictiveLinearRegression,
    RegimeOptimal,
    AlwaysOn,
]


class LoadHistory:
    """Ring of per-interval total cluster demand observations."""

    __slots__ = ("_ring",)

    def __init__(self, capacity: int = 64) -> None:
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self._ring: deque[float] = deque(maxlen=capacity)

    def append(self, demand: float) -> None:
        self._ring.append(demand)

    def last(self, window: int) -> list[float]:
        if window > len(self._ring):
            raise InsufficientHistoryError(
                f"need {window} observations, have {len(self._ring)}"
            )
        return list(self._ring)[-window:]

    def __len__(self) -> int:
        return len(self._ring)


def predict_moving_window(history: LoadHistory, window: int) -> float:
    """Mean of the last ``window`` observations."""
    obs = history.last(window)
    return sum(obs) / window


def predict_linear_regression(history: LoadHistory, window: int) -> float:
    """Least-squares line through the last ``window`` points, one step out.

    The fit runs over positions 0..window-1 and is evaluated at position
    ``window``; a negative extrapolation clamps to zero.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    ys = history.last(window)
    n = float(window)
    xs = range(window)
    sx = sum(xs)
    sy = sum(ys)
    sxx = sum(x * x for x in xs)
    sxy = sum(x * y for x, y in zip(xs, ys))
    denom = n * sxx - sx * sx
    slope = (n * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / n
    return max(0.0, intercept + slope * window)


@dataclass
class AutoscaleState:
    """Hold-down bookkeeping carried between intervals."""

    current_target: int | None = None
    low_streak: int = 0


def _reactive_count(demand: float, per_server_capacity: float, utilization: float) -> int:
    usable = per_server_capacity * utilization
    if usable <= 0:
        raise ValueError("per-server usable capacity must be positive")
    return max(0, ceil(demand / usable - 1e-12))


def target_active_servers(
    policy: PolicyKind,
    history: LoadHistory,
    current_demand: float,
    per_server_capacity: float = 1.0,
    autoscale_state: AutoscaleState | None = None,
) -> int:
    """How many servers the policy wants awake next interval.

    Autoscale is stateful: pass the same ``autoscale_state`` on every
    call so the hold-down streak carries across intervals.
    """
    if isinstance(policy, Reactive):
        return _reactive_count(current_demand, per_server_capacity, policy.target_utilization)
    if isinstance(policy, ReactiveExtraCapacity):
        base = _reactive_count(current_demand, per_server_capacity, policy.target_utilization)
        return ceil(base * (1.0 + policy.margin) - 1e-12)
    if isinstance(policy, Autoscale):
        want = _reactive_count(current_demand, per_server_capacity, policy.target_utilization)
        state = autoscale_state if autoscale_state is not None else AutoscaleState()
        if state.current_target is None or want >= state.current_target:
            state.current_target = want
            state.low_streak = 0
            return want
        state.low_streak += 1
        if state.low_streak >= policy.hold_intervals:
            state.current_target = want
            state.low_streak = 0
            return want
        return state.current_target
    if isinstance(policy, PredictiveMovingWindow):
        predicted = predict_moving_window(history, policy.window)
        return _reactive_count(predicted, per_server_capacity, policy.target_utilization)
    if isinstance(policy, PredictiveLinearRegression):
        predicted = predict_linear_regression(history, policy.window)
        return _reactive_count(predicted, per_server_capacity, policy.target_utilization)
    raise ValueError(f"policy {policy!r} does not produce a server target")


def count_violations(trace: Iterable[tuple[Sequence[Regime], int]]) -> int:
    """Tally SLA violations over a run trace.

    Each interval contributes one violation per server operating in the
    overload regime plus one per application whose demand went unserved.
    """
    total = 0
    for regimes, unserved in trace:
        total += sum(1 for r in regimes if r is Regime.R5) + unserved
    return total
