"""Applications with bounded demand drift, initial-load generators, traces."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import IO, Iterable

DEFAULT_APPS_PER_SERVER = 4
DEFAULT_LAMBDA_RANGE = (0.01, 0.05)


@dataclass(slots=True)
class ApplicationDescriptor:
    """One application (VM) and its demand-growth envelope.

    ``lam`` bounds the demand change per reallocation interval in either
    direction. ``demand`` is a normalized share of one server's capacity.
    """

    app_id: int
    demand: float
    lam: float
    home_server: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.demand <= 1.0:
            raise ValueError(f"demand outside [0, 1]: {self.demand}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be non-negative: {self.lam}")


@dataclass(frozen=True)
class LoadProfile:
    """Range the initial per-server total demand is drawn from."""

    kind: str
    low: float
    high: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.low <= self.high <= 1.0:
            raise ValueError(f"load range must satisfy 0 <= low <= high <= 1: {self}")

    @classmethod
    def low_avg_30(cls) -> "LoadProfile":
        return cls("low", 0.20, 0.40)

    @classmethod
    def high_avg_70(cls) -> "LoadProfile":
        return cls("high", 0.60, 0.80)

    @classmethod
    def custom(cls, low: float, high: float) -> "LoadProfile":
        return cls("custom", low, high)


def generate_initial_load(
    profile: LoadProfile,
    server_count: int,
    apps_per_server: int = DEFAULT_APPS_PER_SERVER,
    rng_seed: int | random.Random = 0,
    lambda_range: tuple[float, float] = DEFAULT_LAMBDA_RANGE,
) -> list[list[ApplicationDescriptor]]:
    """Draw each server's total demand from the profile and split it.

    The split across a server's applications is even, so no application
    starts pinned against the zero bound; the per-application growth
    walks diversify demands from there. Each application gets its own
    growth bound from ``lambda_range``. App ids are assigned globally in
    server order and stay stable for the whole simulation, so demand
    traces can address them directly.
    """
    if server_count < 1:
        raise ValueError("server_count must be >= 1")
    if apps_per_server < 1:
        raise ValueError("apps_per_server must be >= 1")
    lo, hi = lambda_range
    if not 0.0 <= lo <= hi:
        raise ValueError(f"lambda_range must satisfy 0 <= low <= high: {lambda_range}")
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)
    servers: list[list[ApplicationDescriptor]] = []
    next_id = 0
    for k in range(server_count):
        total = rng.uniform(profile.low, profile.high)
        share = total / apps_per_server
        apps = []
        for _ in range(apps_per_server):
            apps.append(
                ApplicationDescriptor(
                    app_id=next_id,
                    demand=min(1.0, share),
                    lam=rng.uniform(lo, hi),
                    home_server=k,
                )
            )
            next_id += 1
        servers.append(apps)
    return servers


def advance_demand(app: ApplicationDescriptor, rng: random.Random) -> ApplicationDescriptor:
    """Step the demand by a bounded symmetric increment, in place."""
    u = rng.uniform(-app.lam, app.lam)
    app.demand = min(1.0, max(0.0, app.demand + u))
    return app


def parse_demand_trace(source: IO[str] | Iterable[str]) -> dict[int, dict[int, float]]:
    """Parse a demand trace: one ``interval, app_id, demand`` per line.

    Blank lines and lines starting with ``#`` are skipped. Returns a
    mapping interval -> {app_id: demand}. Listed apps have their demand
    replaced at that interval; unlisted apps keep their previous demand.
    """
    trace: dict[int, dict[int, float]] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ValueError(f"trace line {lineno}: expected 'interval, app_id, demand'")
        try:
            interval = int(parts[0])
            app_id = int(parts[1])
            demand = float(parts[2])
        except ValueError as exc:
            raise ValueError(f"trace line {lineno}: {exc}") from None
        if interval < 0:
            raise ValueError(f"trace line {lineno}: interval must be >= 0")
        if not 0.0 <= demand <= 1.0:
            raise ValueError(f"trace line {lineno}: demand outside [0, 1]")
        trace.setdefault(interval, {})[app_id] = demand
    return trace
