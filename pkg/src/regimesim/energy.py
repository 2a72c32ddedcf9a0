"""Server power model, five-regime classifier, and CPU sleep states."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from enum import IntEnum


class InvalidBoundariesError(ValueError):
    """Regime thresholds violate the strict ordering requirement."""


class IllegalTransitionError(ValueError):
    """Requested a sleep-state transition outside the allowed graph."""


class Regime(IntEnum):
    """Operating regimes ordered by load: R1 lowest, R5 highest."""

    R1 = 1  # undesirable, load too low to justify staying awake
    R2 = 2  # lower suboptimal
    R3 = 3  # optimal band
    R4 = 4  # upper suboptimal
    R5 = 5  # undesirable, overload


# Estimated average peak power (watts) of volume, mid-range and high-end
# servers, by year.
SERVER_POWER_PRESETS: dict[str, float] = {
    "vol-2000": 186.0,
    "vol-2001": 193.0,
    "vol-2002": 200.0,
    "vol-2003": 207.0,
    "vol-2004": 213.0,
    "vol-2005": 219.0,
    "vol-2006": 225.0,
    "mid-2000": 424.0,
    "mid-2001": 457.0,
    "mid-2002": 491.0,
    "mid-2003": 524.0,
    "mid-2004": 574.0,
    "mid-2005": 625.0,
    "mid-2006": 675.0,
    "high-2000": 5534.0,
    "high-2001": 5832.0,
    "high-2002": 6130.0,
    "high-2003": 6428.0,
    "high-2004": 6973.0,
    "high-2005": 7651.0,
    "high-2006": 8163.0,
}


@dataclass(frozen=True)
class EnergyProfile:
    """Power/performance characteristics of one server.

    ``curve_points`` optionally replaces the linear power model with a
    piecewise-linear map from load to normalized energy. Points are
    (load, energy_fraction) knots; the first must be (0, idle_fraction)
    and the last (1, 1), both coordinates strictly increasing.
    """

    peak_power: float = SERVER_POWER_PRESETS["vol-2006"]
    idle_fraction: float = 0.5
    curve_points: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.peak_power <= 0:
            raise ValueError(f"peak_power must be positive, got {self.peak_power}")
        if not 0.0 <= self.idle_fraction <= 1.0:
            raise ValueError(f"idle_fraction outside [0, 1]: {self.idle_fraction}")
        if self.curve_points is not None:
            pts = tuple((float(x), float(y)) for x, y in self.curve_points)
            object.__setattr__(self, "curve_points", pts)
            if len(pts) < 2 or pts[0][0] != 0.0 or pts[-1] != (1.0, 1.0):
                raise ValueError("curve_points must span load 0 through (1, 1)")
            if abs(pts[0][1] - self.idle_fraction) > 1e-12:
                raise ValueError("curve_points[0] must match idle_fraction")
            for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
                if x1 <= x0 or y1 <= y0:
                    raise ValueError("curve_points must be strictly increasing")

    def energy_fraction(self, load: float) -> float:
        """Normalized energy drawn at ``load``, in [idle_fraction, 1]."""
        if self.curve_points is None:
            return self.idle_fraction + (1.0 - self.idle_fraction) * load
        pts = self.curve_points
        xs = [p[0] for p in pts]
        i = bisect_right(xs, load) - 1
        if i >= len(pts) - 1:
            return pts[-1][1]
        (x0, y0), (x1, y1) = pts[i], pts[i + 1]
        return y0 + (y1 - y0) * (load - x0) / (x1 - x0)

    def perf_curve(self, energy: float) -> float:
        """Normalized performance delivered at normalized energy ``energy``.

        Inverse of :meth:`energy_fraction`; energy at or below the idle
        draw yields zero performance.
        """
        if self.curve_points is None:
            if energy <= self.idle_fraction:
                return 0.0
            if self.idle_fraction >= 1.0:
                return 1.0
            return min(1.0, (energy - self.idle_fraction) / (1.0 - self.idle_fraction))
        pts = self.curve_points
        if energy <= pts[0][1]:
            return 0.0
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if energy <= y1:
                return x0 + (x1 - x0) * (energy - y0) / (y1 - y0)
        return 1.0


DEFAULT_PROFILE = EnergyProfile()


def power_draw(profile: EnergyProfile, load_perf: float) -> float:
    """Instantaneous power (watts) of an awake server at the given load."""
    if not 0.0 <= load_perf <= 1.0:
        raise ValueError(f"load outside [0, 1]: {load_perf}")
    return profile.peak_power * profile.energy_fraction(load_perf)


@dataclass(frozen=True)
class RegimeBoundaries:
    """Per-server regime thresholds.

    Alphas are on the performance (load) axis; betas are their images on
    the normalized-energy axis, filled in from the energy curve when not
    given explicitly.
    """

    alpha_sopt_l: float
    alpha_opt_l: float
    alpha_opt_h: float
    alpha_sopt_h: float
    beta_sopt_l: float | None = None
    beta_opt_l: float | None = None
    beta_opt_h: float | None = None
    beta_sopt_h: float | None = None

    def __post_init__(self) -> None:
        a = (self.alpha_sopt_l, self.alpha_opt_l, self.alpha_opt_h, self.alpha_sopt_h)
        if not (0.0 < a[0] < a[1] < a[2] < a[3] < 1.0):
            raise InvalidBoundariesError(f"thresholds not strictly ordered in (0, 1): {a}")
        if self.beta_sopt_l is None:
            g = DEFAULT_PROFILE.energy_fraction
            names = ("beta_sopt_l", "beta_opt_l", "beta_opt_h", "beta_sopt_h")
            for name, alpha in zip(names, a):
                object.__setattr__(self, name, g(alpha))
        b = (self.beta_sopt_l, self.beta_opt_l, self.beta_opt_h, self.beta_sopt_h)
        if not (b[0] < b[1] < b[2] < b[3]):
            raise InvalidBoundariesError(f"energy thresholds not strictly ordered: {b}")

    @classmethod
    def from_performance(
        cls,
        alpha_sopt_l: float,
        alpha_opt_l: float,
        alpha_opt_h: float,
        alpha_sopt_h: float,
        profile: EnergyProfile = DEFAULT_PROFILE,
    ) -> "RegimeBoundaries":
        """Build boundaries deriving the energy thresholds from ``profile``."""
        g = profile.energy_fraction
        return cls(
            alpha_sopt_l,
            alpha_opt_l,
            alpha_opt_h,
            alpha_sopt_h,
            g(alpha_sopt_l),
            g(alpha_opt_l),
            g(alpha_opt_h),
            g(alpha_sopt_h),
        )

    def as_alphas(self) -> tuple[float, float, float, float]:
        return (self.alpha_sopt_l, self.alpha_opt_l, self.alpha_opt_h, self.alpha_sopt_h)


def classify_regime(load_perf: float, bounds: RegimeBoundaries) -> Regime:
    """Map a load to its operating regime.

    The optimal interval is closed on both ends; threshold values between
    neighbouring suboptimal regimes resolve toward the suboptimal side.
    """
    if not 0.0 <= load_perf <= 1.0:
        raise ValueError(f"load outside [0, 1]: {load_perf}")
    if load_perf < bounds.alpha_sopt_l:
        return Regime.R1
    if load_perf < bounds.alpha_opt_l:
        return Regime.R2
    if load_perf <= bounds.alpha_opt_h:
        return Regime.R3
    if load_perf <= bounds.alpha_sopt_h:
        return Regime.R4
    return Regime.R5


def optimal_band(e_opt: float, delta_fraction: float) -> tuple[float, float]:
    """Return the (low, high) energy band around the optimal level."""
    if not 0.05 <= delta_fraction <= 0.1:
        raise ValueError(f"delta_fraction outside [0.05, 0.1]: {delta_fraction}")
    if not 0.0 < e_opt <= 1.0:
        raise ValueError(f"e_opt outside (0, 1]: {e_opt}")
    return (e_opt * (1.0 - delta_fraction), min(1.0, e_opt * (1.0 + delta_fraction)))


class SleepState(IntEnum):
    """CPU C-states used by the simulation; deeper states save more power."""

    C0 = 0
    C1 = 1
    C3 = 3
    C6 = 6


_SLEEPING = (SleepState.C1, SleepState.C3, SleepState.C6)


@dataclass(frozen=True)
class SleepTimings:
    """Wake latencies, residual draw, and entry cost for each sleep state.

    Residual power fractions must decrease with sleep depth and wake
    latencies must increase with it. Entering a sleep state is cheap and
    fixed; waking costs near-peak power for the whole latency.
    """

    wake_latency_s: dict[SleepState, float] = field(
        default_factory=lambda: {
            SleepState.C1: 0.01,
            SleepState.C3: 30.0,
            SleepState.C6: 260.0,
        }
    )
    residual_fraction: dict[SleepState, float] = field(
        default_factory=lambda: {
            SleepState.C1: 0.25,
            SleepState.C3: 0.05,
            SleepState.C6: 0.01,
        }
    )
    entry_latency_s: float = 1.0
    entry_energy_j: float = 0.0

    def __post_init__(self) -> None:
        lat = [self.wake_latency_s[s] for s in _SLEEPING]
        res = [self.residual_fraction[s] for s in _SLEEPING]
        if not (0.0 < lat[0] < lat[1] < lat[2]):
            raise ValueError(f"wake latencies must increase with depth: {lat}")
        if not (res[0] > res[1] > res[2] > 0.0):
            raise ValueError(f"residual power must decrease with depth: {res}")


DEFAULT_SLEEP_TIMINGS = SleepTimings()


def transition_sleep(
    state_from: SleepState,
    state_to: SleepState,
    profile: EnergyProfile = DEFAULT_PROFILE,
    timings: SleepTimings = DEFAULT_SLEEP_TIMINGS,
) -> tuple[float, float]:
    """Latency (s) and energy (J) of a sleep-state transition.

    Allowed moves: C0 into any sleep state, any sleep state back to C0,
    and the no-op C0 to C0. Deep-to-deep moves must route through C0.
    """
    if state_from == SleepState.C0 and state_to == SleepState.C0:
        return (0.0, 0.0)
    if state_from == SleepState.C0 and state_to in _SLEEPING:
        return (timings.entry_latency_s, timings.entry_energy_j)
    if state_from in _SLEEPING and state_to == SleepState.C0:
        latency = timings.wake_latency_s[state_from]
        return (latency, profile.peak_power * latency)
    raise IllegalTransitionError(f"{state_from.name} -> {state_to.name} must route through C0")


def choose_sleep_state(cluster_load_fraction: float) -> SleepState:
    """Pick the sleep state for a server being parked.

    Above 60% overall cluster load a shallow sleep keeps capacity close
    at hand; at or below it the deep state wins.
    """
    if not 0.0 <= cluster_load_fraction <= 1.0:
        raise ValueError(f"cluster load outside [0, 1]: {cluster_load_fraction}")
    if cluster_load_fraction > 0.6:
        return SleepState.C3
    return SleepState.C6
