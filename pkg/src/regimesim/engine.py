"""Interval-driven simulation of a server cluster under reallocation.

Each interval advances every application's demand, forecasts per-server
regimes, lets out-of-band servers negotiate application moves (or a
capacity policy resize the active set), then accounts energy, decisions,
and violations into one metrics record per interval.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from math import fsum

from .config import SimulationConfig
from .energy import (
    Regime,
    SleepState,
    choose_sleep_state,
    classify_regime,
    power_draw,
    transition_sleep,
)
from .policies import (
    DEFAULT_TARGET_UTILIZATION,
    AlwaysOn,
    AutoscaleState,
    InsufficientHistoryError,
    LoadHistory,
    Reactive,
    RegimeOptimal,
    target_active_servers,
)
from .protocol import (
    IN_CLUSTER,
    LEADER,
    Cluster,
    DecisionKind,
    MatchResult,
    MessageLog,
    RecipientPool,
    ServerState,
    count_violation_apps,
    forecast_regime,
    negotiate,
    predicted_load,
    sample_boundaries,
    wake_servers,
)
from .workload import generate_initial_load, parse_demand_trace

# Independent RNG streams per concern, so changing e.g. the boundary draw
# never shifts the demand walk for the same seed.
_SEED_STRIDE = 1000003
_WORKLOAD_OFFSET = 11
_TOPOLOGY_OFFSET = 29
_WALK_OFFSET = 47

_EMPTY_MATCH = MatchResult()


@dataclass(frozen=True)
class MetricsRecord:
    """Per-interval observables, one row of the run's output table."""

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
    ratio: float | None
    violations: int


@dataclass(frozen=True)
class EnergyParts:
    """Energy split for one interval, for independent re-derivation."""

    awake_j: float
    sleeping_j: float
    transition_j: float
    migration_j: float

    @property
    def total_j(self) -> float:
        return self.awake_j + self.sleeping_j + self.transition_j + self.migration_j


@dataclass(frozen=True)
class RunSummary:
    """Whole-run aggregates."""

    mean_ratio: float | None
    std_ratio: float | None
    final_asleep: int
    total_energy_j: float
    total_violations: int
    histogram_before: tuple[int, int, int, int, int]
    histogram_after: tuple[int, int, int, int, int]


@dataclass(frozen=True)
class CompareResult:
    """Energy of a run against the same run with every server always on."""

    energy_always_on_j: float
    energy_candidate_j: float
    savings_ratio: float


@dataclass
class RunResult:
    """Everything a finished run produced."""

    records: list[MetricsRecord]
    summary: RunSummary
    message_log: list[str] | None
    energy_parts: list[EnergyParts]
    insufficient_capacity: bool


class Simulation:
    """One configured run; ``step`` advances a single interval."""

    def __init__(self, config: SimulationConfig) -> None:
        self.config = config
        base = config.seed * _SEED_STRIDE
        workload_rng = random.Random(base + _WORKLOAD_OFFSET)
        topology_rng = random.Random(base + _TOPOLOGY_OFFSET)
        self.walk_rng = random.Random(base + _WALK_OFFSET)

        profile = config.energy_profile()
        shared_bounds = config.regime_bounds()
        hosted = generate_initial_load(
            config.load,
            config.cluster_size,
            config.apps_per_server,
            workload_rng,
            config.lambda_range,
        )
        servers: list[ServerState] = []
        for server_id, apps in enumerate(hosted):
            bounds = (
                shared_bounds if shared_bounds is not None else sample_boundaries(topology_rng)
            )
            state = ServerState(
                server_id=server_id, profile=profile, bounds=bounds, apps=apps
            )
            state.refresh()
            servers.append(state)

        self.log = MessageLog() if config.message_log else None
        self.cluster = Cluster(
            servers,
            cost_model=config.cost,
            sleep_timings=config.sleep_timings(),
            params=config.protocol,
            log=self.log,
            tau=config.tau_s,
        )
        self.apps = [app for server_apps in hosted for app in server_apps]
        self._app_index = {app.app_id: app for app in self.apps}
        if config.demand_trace is not None:
            with open(config.demand_trace, encoding="utf-8") as fh:
                self.trace = parse_demand_trace(fh)
        else:
            self.trace = {}

        policy = config.policy
        self.is_protocol = isinstance(policy, RegimeOptimal)
        self.is_always_on = isinstance(policy, AlwaysOn)
        self.history = LoadHistory(capacity=max(64, getattr(policy, "window", 0) + 1))
        self.autoscale_state = AutoscaleState()
        self.interval = 0
        self.energy_parts: list[EnergyParts] = []
        self.insufficient_capacity = False
        self._last_total_demand = 0.0
        self.histogram_initial = self._awake_histogram()

    def _awake_histogram(self) -> tuple[int, int, int, int, int]:
        counts = [0, 0, 0, 0, 0]
        for s in self.cluster.servers:
            if s.awake:
                counts[classify_regime(s.load, s.bounds) - 1] += 1
        return tuple(counts)

    def step(self) -> MetricsRecord:
        t = self.interval
        cluster = self.cluster
        tau = self.config.tau_s
        timings = cluster.sleep_timings

        for app in self.apps:
            u = self.walk_rng.uniform(-app.lam, app.lam)
            app.demand = min(1.0, max(0.0, app.demand + u))
        overrides = self.trace.get(t)
        if overrides:
            for app_id in sorted(overrides):
                app = self._app_index.get(app_id)
                if app is not None:
                    app.demand = overrides[app_id]
        for s in cluster.servers:
            if s.awake:
                previous = s.load
                s.refresh()
                s.growth = s.load - previous
        total_demand = fsum(app.demand for app in self.apps)
        self._last_total_demand = total_demand
        cluster.load_hint = min(1.0, total_demand / len(cluster.servers))
        self.history.append(total_demand)

        for s in cluster.servers:
            if s.wake_available_at is not None and s.wake_available_at <= t:
                s.sleep = SleepState.C0
                s.wake_available_at = None
                s.growth = 0.0

        touched: set[int] = set()
        in_cluster = local = moved = sleeps = 0
        wake_energy = 0.0
        if self.is_protocol:
            in_cluster, local, moved, sleeps, wake_energy = self._protocol_phase(t, touched)
        elif not self.is_always_on:
            in_cluster, local, moved, sleeps, wake_energy = self._policy_phase(t, touched)

        if not self.is_always_on:
            threshold = cluster.params.vertical_grant_threshold
            for s in cluster.servers:
                if (
                    s.awake
                    and s.server_id not in touched
                    and s.growth > threshold
                    and s.demand_sum <= 1.0 + 1e-9
                ):
                    local += 1

        violations = 0
        for s in cluster.servers:
            if s.awake:
                if s.load > s.bounds.alpha_sopt_h:
                    violations += 1
                violations += count_violation_apps(s)

        awake_j = 0.0
        sleeping_j = 0.0
        for s in cluster.servers:
            if s.awake:
                awake_j += power_draw(s.profile, s.load) * tau
            else:
                sleeping_j += s.profile.peak_power * timings.residual_fraction[s.sleep] * tau
        transition_j = wake_energy + sleeps * timings.entry_energy_j
        migration_j = moved * cluster.cost_model.migration_energy_j()
        parts = EnergyParts(awake_j, sleeping_j, transition_j, migration_j)
        self.energy_parts.append(parts)

        regimes = [0, 0, 0, 0, 0]
        asleep = {SleepState.C1: 0, SleepState.C3: 0, SleepState.C6: 0}
        for s in cluster.servers:
            if s.awake:
                regimes[classify_regime(s.load, s.bounds) - 1] += 1
            else:
                asleep[s.sleep] += 1

        ratio = in_cluster / local if local > 0 else None
        record = MetricsRecord(
            interval=t,
            r1=regimes[0],
            r2=regimes[1],
            r3=regimes[2],
            r4=regimes[3],
            r5=regimes[4],
            asleep_c1=asleep[SleepState.C1],
            asleep_c3=asleep[SleepState.C3],
            asleep_c6=asleep[SleepState.C6],
            energy_j=parts.total_j,
            in_cluster=in_cluster,
            local=local,
            ratio=ratio,
            violations=violations,
        )
        self.interval += 1
        return record

    def _protocol_phase(self, t: int, touched: set[int]) -> tuple[int, int, int, int, float]:
        cluster = self.cluster
        params = cluster.params
        in_cluster = local = moved = sleeps = 0
        wake_energy = 0.0

        buckets: dict[Regime, list[tuple[float, ServerState]]] = {r: [] for r in Regime}
        costs_by_id = {}
        for s in cluster.awake_servers():
            pred, regime, costs = forecast_regime(s, tau=cluster.tau, cost_model=cluster.cost_model)
            buckets[regime].append((pred, s))
            costs_by_id[s.server_id] = costs
        if self.log is not None:
            candidates = (
                len(buckets[Regime.R1])
                + len(buckets[Regime.R2])
                + len(buckets[Regime.R4])
                + len(buckets[Regime.R5])
            )
            for regime in (Regime.R1, Regime.R2, Regime.R4, Regime.R5):
                for _, s in buckets[regime]:
                    self.log.emit(t, s.server_id, LEADER, "notify", 16)
                    self.log.emit(t, LEADER, s.server_id, "match", 16 * max(1, candidates - 1))

        # Any awake server with room below its optimal ceiling can receive;
        # the pool's capacity rule prunes the rest. Donors are matched on
        # current load, not forecast.
        awake = cluster.awake_servers()
        pool = RecipientPool(awake, margin=params.fill_margin)
        donors = [s for s in awake if s.regime in (Regime.R4, Regime.R5)]

        def run_negotiation(server: ServerState) -> None:
            nonlocal in_cluster, local, moved, sleeps
            decisions = negotiate(
                server,
                _EMPTY_MATCH,
                costs_by_id[server.server_id],
                cluster,
                t,
                sinks_pool=pool,
                donor_states=donors,
            )
            if decisions:
                touched.add(server.server_id)
            for d in decisions:
                if d.classification == IN_CLUSTER:
                    in_cluster += 1
                else:
                    local += 1
                if d.kind in (DecisionKind.MIGRATE_OUT, DecisionKind.MIGRATE_IN):
                    moved += len(d.subject_apps)
                    touched.add(d.partner)
                elif d.kind is DecisionKind.SLEEP:
                    sleeps += 1

        def deep(pred: float, s: ServerState) -> bool:
            b = s.bounds
            return pred > b.alpha_opt_h + params.deep_fraction * (b.alpha_sopt_h - b.alpha_opt_h)

        shedders = list(buckets[Regime.R5]) + [
            (pred, s) for pred, s in buckets[Regime.R4] if deep(pred, s)
        ]
        # Hot clusters relieve real overload only; cool ones chase the
        # conservative forecast (mirrors the negotiation shed target).
        hot = cluster.cluster_load_fraction() > params.shed_load_ceiling
        if hot:
            # Recipient slots are scarce: servers needing the smallest
            # transfer go first so one slot's worth of room frees as many
            # overloaded servers as possible.
            def rescue_key(item: tuple[float, ServerState]) -> tuple:
                pred, s = item
                if s.load > s.bounds.alpha_sopt_h and s.apps:
                    return (0, min(a.demand for a in s.apps), s.server_id)
                return (1, -pred, s.server_id)

            shedders.sort(key=rescue_key)
        else:
            shedders.sort(key=lambda item: (-item[0], item[1].server_id))
        gap_total = 0.0
        for _, s in shedders:
            run_negotiation(s)
            after = s.load if hot else predicted_load(s)
            if after > s.bounds.alpha_sopt_h:
                gap_total += after - s.bounds.alpha_opt_h

        for _, s in sorted(buckets[Regime.R2], key=lambda item: (item[0], item[1].server_id)):
            live = classify_regime(min(1.0, predicted_load(s)), s.bounds)
            if live is not Regime.R2:
                continue
            run_negotiation(s)

        for _, s in sorted(buckets[Regime.R1], key=lambda item: (item[0], item[1].server_id)):
            if not s.awake:
                continue
            live = classify_regime(min(1.0, predicted_load(s)), s.bounds)
            if live is not Regime.R1:
                continue
            run_negotiation(s)

        if gap_total > 0.0:
            woken, insufficient = wake_servers(cluster, gap_total, now=t)
            self.insufficient_capacity |= insufficient
            if woken:
                by_id = {s.server_id: s for s in cluster.servers}
                for sid, decision in woken:
                    in_cluster += 1
                    touched.add(sid)
                    server = by_id[sid]
                    _, energy = transition_sleep(
                        decision.sleep_state, SleepState.C0, server.profile, cluster.sleep_timings
                    )
                    wake_energy += energy

        return in_cluster, local, moved, sleeps, wake_energy

    def _policy_phase(self, t: int, touched: set[int]) -> tuple[int, int, int, int, float]:
        cluster = self.cluster
        policy = self.config.policy
        in_cluster = local = moved = sleeps = 0
        wake_energy = 0.0

        try:
            want = target_active_servers(
                policy, self.history, self._last_total_demand, 1.0, self.autoscale_state
            )
        except InsufficientHistoryError:
            fallback = Reactive(
                target_utilization=getattr(
                    policy, "target_utilization", DEFAULT_TARGET_UTILIZATION
                )
            )
            want = target_active_servers(fallback, self.history, self._last_total_demand)
        want = max(1, min(want, len(cluster.servers)))

        active = [s for s in cluster.servers if s.awake or s.wake_available_at is not None]
        if want > len(active):
            sleepers = [s for s in cluster.sleepers() if s.wake_available_at is None]
            sleepers.sort(key=lambda s: (s.sleep, -s.bounds.alpha_opt_h, s.server_id))
            for s in sleepers[: want - len(active)]:
                latency, energy = transition_sleep(
                    s.sleep, SleepState.C0, s.profile, cluster.sleep_timings
                )
                s.wake_available_at = t + max(1, math.ceil(latency / cluster.tau))
                wake_energy += energy
                in_cluster += 1
                touched.add(s.server_id)
                if self.log is not None:
                    self.log.emit(t, LEADER, s.server_id, "wake", 16)
            return in_cluster, local, moved, sleeps, wake_energy

        surplus = len(active) - want
        if surplus <= 0:
            return in_cluster, local, moved, sleeps, wake_energy

        candidates = sorted(cluster.awake_servers(), key=lambda s: (s.load, s.server_id))
        for s in candidates:
            if surplus == 0:
                break
            recipients = [r for r in cluster.awake_servers() if r.server_id != s.server_id]
            placements: list[tuple] = []
            feasible = True
            for app in sorted(s.apps, key=lambda a: (-a.demand, a.app_id)):
                recipients.sort(key=lambda r: (r.demand_sum, r.server_id))
                target = recipients[0] if recipients else None
                if target is None or target.demand_sum + app.demand > 1.0 + 1e-12:
                    feasible = False
                    break
                target.apps.append(app)
                app.home_server = target.server_id
                target.refresh()
                placements.append((app, target))
            if not feasible:
                for app, target in placements:
                    target.apps.remove(app)
                    target.refresh()
                    app.home_server = s.server_id
                break
            partners: dict[int, int] = {}
            for app, target in placements:
                s.apps.remove(app)
                partners[target.server_id] = partners.get(target.server_id, 0) + 1
                if self.log is not None:
                    self.log.emit(t, s.server_id, target.server_id, "negotiate", 32)
            s.refresh()
            moved += len(placements)
            in_cluster += len(partners)
            touched.update(partners)
            state = choose_sleep_state(cluster.cluster_load_fraction())
            s.sleep = state
            sleeps += 1
            in_cluster += 1
            touched.add(s.server_id)
            surplus -= 1
            if self.log is not None:
                self.log.emit(t, s.server_id, LEADER, "notify", 16)
        return in_cluster, local, moved, sleeps, wake_energy

    def run_all(self) -> RunResult:
        records = [self.step() for _ in range(self.config.intervals)]
        summary = summarize(records, self.histogram_initial)
        lines = self.log.lines() if self.log is not None else None
        return RunResult(
            records=records,
            summary=summary,
            message_log=lines,
            energy_parts=list(self.energy_parts),
            insufficient_capacity=self.insufficient_capacity,
        )


def summarize(
    records: list[MetricsRecord],
    histogram_before: tuple[int, int, int, int, int],
) -> RunSummary:
    """Aggregate per-interval records into whole-run figures."""
    ratios = [r.ratio for r in records if r.ratio is not None]
    if ratios:
        mean = fsum(ratios) / len(ratios)
        std = math.sqrt(fsum((x - mean) ** 2 for x in ratios) / len(ratios))
    else:
        mean = None
        std = None
    last = records[-1]
    return RunSummary(
        mean_ratio=mean,
        std_ratio=std,
        final_asleep=last.asleep_c1 + last.asleep_c3 + last.asleep_c6,
        total_energy_j=fsum(r.energy_j for r in records),
        total_violations=sum(r.violations for r in records),
        histogram_before=histogram_before,
        histogram_after=(last.r1, last.r2, last.r3, last.r4, last.r5),
    )


def run(config: SimulationConfig) -> tuple[list[MetricsRecord], RunSummary]:
    """Run one configured simulation to completion."""
    result = Simulation(config).run_all()
    return (result.records, result.summary)


def run_result(config: SimulationConfig) -> RunResult:
    """Run one configured simulation, keeping the full result object."""
    return Simulation(config).run_all()


def ratio_time_series(records: list[MetricsRecord]) -> list[tuple[int, float | None]]:
    """The in-cluster to local decision ratio per interval."""
    return [(r.interval, r.ratio) for r in records]


def compare_energy(config: SimulationConfig, candidate=None) -> CompareResult:
    """Energy of a candidate policy against the always-on baseline.

    Both runs use the same seed, so they see identical demand traces; the
    savings ratio is baseline energy over candidate energy.
    """
    candidate_policy = candidate if candidate is not None else config.policy
    baseline_cfg = replace(config, policy=AlwaysOn())
    candidate_cfg = replace(config, policy=candidate_policy)
    baseline = Simulation(baseline_cfg).run_all()
    cand = Simulation(candidate_cfg).run_all()
    base_j = baseline.summary.total_energy_j
    cand_j = cand.summary.total_energy_j
    ratio = base_j / cand_j if cand_j > 0.0 else math.inf
    return CompareResult(
        energy_always_on_j=base_j,
        energy_candidate_j=cand_j,
        savings_ratio=ratio,
    )
